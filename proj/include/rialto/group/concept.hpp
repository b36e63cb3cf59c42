#pragma once

#include <concepts>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include "rialto/rng.hpp"

namespace rialto {

template <class G>
concept PrimeOrderGroup = requires(const typename G::Scalar& s, const typename G::Element& e, Rng& rng,
                                   std::span<const std::uint8_t, 64> wide) {
  { G::g() } -> std::convertible_to<typename G::Element>;
  { G::h() } -> std::convertible_to<typename G::Element>;
  { G::name() } -> std::convertible_to<std::string_view>;
  { G::kMaxRangeBits } -> std::convertible_to<std::size_t>;
  { G::Scalar::from_u64(std::uint64_t{}) } -> std::same_as<typename G::Scalar>;
  { G::Scalar::from_i64(std::int64_t{}) } -> std::same_as<typename G::Scalar>;
  { G::Scalar::random(rng) } -> std::same_as<typename G::Scalar>;
  { G::Scalar::from_wide(wide) } -> std::same_as<typename G::Scalar>;
  { s + s } -> std::same_as<typename G::Scalar>;
  { s * s } -> std::same_as<typename G::Scalar>;
  { -s } -> std::same_as<typename G::Scalar>;
  { s.inverse() } -> std::same_as<typename G::Scalar>;
  { s.to_signed() } -> std::same_as<std::optional<std::int64_t>>;
  { s.to_bytes() };
  { e * e } -> std::same_as<typename G::Element>;
  { e / e } -> std::same_as<typename G::Element>;
  { e.pow(s) } -> std::same_as<typename G::Element>;
  { e.is_valid() } -> std::same_as<bool>;
  { e.to_bytes() };
  { G::Element::from_hash(wide) } -> std::same_as<typename G::Element>;
};

}  // namespace rialto
