#pragma once

#include <cstdint>
#include <string_view>

namespace rialto {

using OrderId = std::uint64_t;
using AccountSlot = std::size_t;

enum class Side : std::uint8_t { buy, sell };

inline std::string_view to_string(Side s) { return s == Side::buy ? "BUY" : "SELL"; }

}  // namespace rialto
