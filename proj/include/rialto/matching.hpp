#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "rialto/types.hpp"

namespace rialto {

struct BookEntry {
  OrderId id = 0;
  Side side = Side::buy;

  friend bool operator==(const BookEntry&, const BookEntry&) = default;
};

/// Orders in ascending rate order. In Rialto the rates themselves are not
/// known; only positions are.
using SortedBook = std::vector<BookEntry>;

struct MatchPair {
  OrderId buy = 0;
  OrderId sell = 0;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
  friend auto operator<=>(const MatchPair&, const MatchPair&) = default;
};

using MatchSet = std::vector<MatchPair>;

/// Two-pointer matching over buyers and sellers that are each listed in
/// ascending key order. A buyer that cannot take the current seller is
/// skipped; a feasible pair advances both.
template <class BuyKey, class SellKey, class Feasible>
std::vector<std::pair<std::size_t, std::size_t>> two_pointer_match(const std::vector<BuyKey>& buys,
                                                                   const std::vector<SellKey>& sells,
                                                                   Feasible feasible) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t b = 0, s = 0;
  while (b < buys.size() && s < sells.size()) {
    if (feasible(buys[b], sells[s])) {
      out.emplace_back(b, s);
      ++b;
      ++s;
    } else {
      ++b;
    }
  }
  return out;
}

/// Positional form: a buyer can take a seller listed before it.
inline MatchSet match_orders(const SortedBook& book) {
  std::vector<std::size_t> buys, sells;
  for (std::size_t i = 0; i < book.size(); ++i) (book[i].side == Side::buy ? buys : sells).push_back(i);
  MatchSet out;
  for (auto [b, s] : two_pointer_match(buys, sells, [](std::size_t pb, std::size_t ps) { return pb > ps; }))
    out.push_back({book[buys[b]].id, book[sells[s]].id});
  return out;
}

namespace detail {
inline std::map<OrderId, std::size_t> positions(const SortedBook& book) {
  std::map<OrderId, std::size_t> pos;
  for (std::size_t i = 0; i < book.size(); ++i) pos[book[i].id] = i;
  return pos;
}
}  // namespace detail

/// Makes the matched buyers the most competitive ones. While some unmatched
/// buyer sits above a matched buyer, the highest such unmatched buyer takes
/// the seller of the highest matched buyer below it. Afterwards buyers and
/// sellers are re-paired in ascending order, so higher buyers get higher
/// sellers.
inline MatchSet fair_swap(const MatchSet& matches, const SortedBook& book) {
  const auto pos = detail::positions(book);
  std::map<std::size_t, OrderId> buyer_seller;  // matched buyer position -> seller id
  std::set<std::size_t> unmatched;
  std::set<OrderId> matched_buyers;
  for (const auto& m : matches) {
    buyer_seller[pos.at(m.buy)] = m.sell;
    matched_buyers.insert(m.buy);
  }
  for (std::size_t i = 0; i < book.size(); ++i)
    if (book[i].side == Side::buy && !matched_buyers.count(book[i].id)) unmatched.insert(i);

  for (;;) {
    std::optional<std::pair<std::size_t, std::size_t>> swap;  // (unmatched, matched)
    for (auto u = unmatched.rbegin(); u != unmatched.rend(); ++u) {
      auto below = buyer_seller.lower_bound(*u);
      if (below == buyer_seller.begin()) continue;
      --below;
      swap = {*u, below->first};
      break;
    }
    if (!swap) break;
    const auto [u, m] = *swap;
    buyer_seller[u] = buyer_seller.at(m);
    buyer_seller.erase(m);
    unmatched.erase(u);
    unmatched.insert(m);
  }

  std::vector<std::size_t> sellers;
  for (const auto& [bp, sid] : buyer_seller) sellers.push_back(pos.at(sid));
  std::sort(sellers.begin(), sellers.end());
  MatchSet out;
  std::size_t k = 0;
  for (const auto& [bp, sid] : buyer_seller) out.push_back({book[bp].id, book[sellers[k++]].id});
  return out;
}

/// Matched buyers are exactly the top |matches| buyers by position.
inline bool is_buyer_fair(const MatchSet& matches, const SortedBook& book) {
  std::set<OrderId> matched;
  for (const auto& m : matches) matched.insert(m.buy);
  bool seen_unmatched_above = false;
  for (auto it = book.rbegin(); it != book.rend(); ++it) {
    if (it->side != Side::buy) continue;
    if (!matched.count(it->id)) seen_unmatched_above = true;
    else if (seen_unmatched_above) return false;
  }
  return true;
}

/// Every buyer sits after its seller in the book.
inline bool is_feasible(const MatchSet& matches, const SortedBook& book) {
  const auto pos = detail::positions(book);
  std::set<OrderId> used;
  for (const auto& m : matches) {
    if (!pos.count(m.buy) || !pos.count(m.sell)) return false;
    if (book[pos.at(m.buy)].side != Side::buy || book[pos.at(m.sell)].side != Side::sell) return false;
    if (pos.at(m.buy) < pos.at(m.sell)) return false;
    if (!used.insert(m.buy).second || !used.insert(m.sell).second) return false;
  }
  return true;
}

struct PricedOrder {
  OrderId id = 0;
  std::int64_t rate = 0;
  std::uint64_t timestamp = 0;  // submission sequence number
};

/// Classic price-time priority: best bid against best ask until they no
/// longer cross.
inline MatchSet price_time_match(std::vector<PricedOrder> buys, std::vector<PricedOrder> sells) {
  std::sort(buys.begin(), buys.end(), [](const auto& a, const auto& b) {
    return a.rate != b.rate ? a.rate > b.rate : a.timestamp < b.timestamp;
  });
  std::sort(sells.begin(), sells.end(), [](const auto& a, const auto& b) {
    return a.rate != b.rate ? a.rate < b.rate : a.timestamp < b.timestamp;
  });
  MatchSet out;
  for (std::size_t i = 0; i < std::min(buys.size(), sells.size()); ++i) {
    if (buys[i].rate < sells[i].rate) break;
    out.push_back({buys[i].id, sells[i].id});
  }
  return out;
}

struct BucketedBuy {
  OrderId id = 0;
  std::int64_t floor = 0;
  std::uint64_t timestamp = 0;
};

struct BucketedSell {
  OrderId id = 0;
  std::int64_t ceiling = 0;
  std::uint64_t timestamp = 0;
};

/// Buyers offer their bucket floor, sellers ask their bucket ceiling, so
/// any emitted pair is feasible on the hidden rates. Same-bucket pairs can
/// never match since floor < ceiling.
inline MatchSet bucket_match(std::vector<BucketedBuy> buys, std::vector<BucketedSell> sells) {
  std::sort(buys.begin(), buys.end(), [](const auto& a, const auto& b) {
    return a.floor != b.floor ? a.floor < b.floor : a.timestamp < b.timestamp;
  });
  std::sort(sells.begin(), sells.end(), [](const auto& a, const auto& b) {
    return a.ceiling != b.ceiling ? a.ceiling < b.ceiling : a.timestamp < b.timestamp;
  });
  MatchSet out;
  for (auto [b, s] : two_pointer_match(buys, sells, [](const BucketedBuy& x, const BucketedSell& y) {
         return x.floor >= y.ceiling;
       }))
    out.push_back({buys[b].id, sells[s].id});
  return out;
}

}  // namespace rialto
