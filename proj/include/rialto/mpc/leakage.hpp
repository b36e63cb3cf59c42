#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace rialto::mpc {

/// The only outputs a round may disclose.
enum class LeakageTag { sorted_permutation, aggregate_fees, topk_rates, shuffled_commitments };

inline std::string_view to_string(LeakageTag tag) {
  switch (tag) {
    case LeakageTag::sorted_permutation: return "sorted-permutation";
    case LeakageTag::aggregate_fees: return "aggregate-fees";
    case LeakageTag::topk_rates: return "topK-rates";
    case LeakageTag::shuffled_commitments: return "shuffled-commitments";
  }
  return "?";
}

struct LeakageEntry {
  std::uint64_t round = 0;
  LeakageTag tag{};
  nlohmann::ordered_json payload;
};

class LeakageLog {
 public:
  void append(LeakageEntry entry) { entries_.push_back(std::move(entry)); }
  const std::vector<LeakageEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::vector<LeakageEntry> for_round(std::uint64_t round) const {
    std::vector<LeakageEntry> out;
    for (const auto& e : entries_)
      if (e.round == round) out.push_back(e);
    return out;
  }

  static nlohmann::ordered_json to_json(const LeakageEntry& e) {
    nlohmann::ordered_json j;
    j["round"] = e.round;
    j["tag"] = std::string(to_string(e.tag));
    j["payload"] = e.payload;
    return j;
  }

 private:
  std::vector<LeakageEntry> entries_;
};

}  // namespace rialto::mpc
