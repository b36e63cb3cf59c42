#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rialto/errors.hpp"
#include "rialto/rng.hpp"

namespace rialto {

/// Permutations act as out[j] = in[perm[j]].
using Permutation = std::vector<std::size_t>;

inline bool is_permutation_of_range(std::span<const std::size_t> perm) {
  std::vector<bool> seen(perm.size(), false);
  for (auto p : perm) {
    if (p >= perm.size() || seen[p]) return false;
    seen[p] = true;
  }
  return true;
}

/// Applying `first` then `second` equals applying compose(first, second).
inline Permutation compose(const Permutation& first, const Permutation& second) {
  if (first.size() != second.size()) throw ParameterError("compose: size mismatch");
  Permutation out(first.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = first[second[j]];
  return out;
}

inline Permutation identity_permutation(std::size_t n) {
  Permutation p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  return p;
}

struct SwapGate {
  std::size_t a = 0;
  std::size_t b = 0;
  bool cross = false;
  std::size_t layer = 0;

  friend bool operator==(const SwapGate&, const SwapGate&) = default;
};

/// Arbitrary-size Waksman network. Gates are applied in stored order.
struct PermutationNetwork {
  std::size_t size = 0;
  std::vector<SwapGate> gates;
};

/// Gate count of the recursive construction: w(1) = 0,
/// w(n) = w(floor(n/2)) + w(ceil(n/2)) + n - 1.
inline std::size_t waksman_gate_count(std::size_t n) {
  if (n <= 1) return 0;
  return waksman_gate_count(n / 2) + waksman_gate_count(n - n / 2) + n - 1;
}

namespace detail {

class WaksmanRouter {
 public:
  explicit WaksmanRouter(std::vector<SwapGate>& out) : out_(out) {}

  // Routes `perm` (local, out[j] = in[perm[j]]) over wires `pos`; returns depth.
  std::size_t route(const std::vector<std::size_t>& pos, const Permutation& perm, std::size_t layer) {
    const std::size_t n = pos.size();
    if (n <= 1) return 0;
    const std::size_t half = n / 2;
    const bool odd = n % 2 == 1;
    const std::size_t input_pairs = half;
    const std::size_t output_pairs = odd ? half : half - 1;

    Permutation inv(n);
    for (std::size_t j = 0; j < n; ++j) inv[perm[j]] = j;

    // side[i] for the element entering at input i: 0 = upper, 1 = lower.
    std::vector<int> side(n, -1);
    auto in_partner = [&](std::size_t i) -> std::ptrdiff_t {
      return i < 2 * input_pairs ? static_cast<std::ptrdiff_t>(i ^ 1U) : -1;
    };
    auto out_partner = [&](std::size_t j) -> std::ptrdiff_t {
      return j < 2 * output_pairs ? static_cast<std::ptrdiff_t>(j ^ 1U) : -1;
    };
    std::vector<std::size_t> stack;
    auto assign = [&](std::size_t start, int s) {
      if (side[start] != -1) {
        if (side[start] != s) throw ParameterError("waksman: inconsistent routing constraints");
        return;
      }
      side[start] = s;
      stack.push_back(start);
      while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        const int other = 1 - side[i];
        std::ptrdiff_t neighbours[2] = {in_partner(i), -1};
        if (auto jp = out_partner(inv[i]); jp >= 0) neighbours[1] = static_cast<std::ptrdiff_t>(perm[jp]);
        for (auto nb : neighbours) {
          if (nb < 0) continue;
          auto& sn = side[static_cast<std::size_t>(nb)];
          if (sn == -1) {
            sn = other;
            stack.push_back(static_cast<std::size_t>(nb));
          } else if (sn != other) {
            throw ParameterError("waksman: inconsistent routing constraints");
          }
        }
      }
    };

    if (odd) {
      assign(n - 1, 1);
      assign(perm[n - 1], 1);
    } else {
      assign(perm[n - 2], 0);
      assign(perm[n - 1], 1);
    }
    for (std::size_t i = 0; i < n; ++i)
      if (side[i] == -1) assign(i, 0);

    for (std::size_t k = 0; k < input_pairs; ++k)
      out_.push_back({pos[2 * k], pos[2 * k + 1], side[2 * k] == 1, layer});

    std::vector<std::size_t> upper_pos(half), lower_pos(n - half);
    for (std::size_t k = 0; k < half; ++k) upper_pos[k] = pos[2 * k];
    for (std::size_t k = 0; k < n - half; ++k) lower_pos[k] = pos[std::min(2 * k + 1, n - 1)];

    Permutation upper_perm(half), lower_perm(n - half);
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t src = perm[j];
      (side[src] == 0 ? upper_perm : lower_perm)[j / 2] = src / 2;
    }

    const std::size_t d_upper = route(upper_pos, upper_perm, layer + 1);
    const std::size_t d_lower = route(lower_pos, lower_perm, layer + 1);
    const std::size_t out_layer = layer + 1 + std::max(d_upper, d_lower);

    for (std::size_t k = 0; k < output_pairs; ++k)
      out_.push_back({pos[2 * k], pos[2 * k + 1], side[perm[2 * k]] == 1, out_layer});
    return out_layer - layer + (output_pairs > 0 ? 1 : 0);
  }

 private:
  std::vector<SwapGate>& out_;
};

}  // namespace detail

inline PermutationNetwork build_network(const Permutation& perm) {
  if (!is_permutation_of_range(perm)) throw ParameterError("build_network: input is not a permutation");
  PermutationNetwork net{perm.size(), {}};
  net.gates.reserve(waksman_gate_count(perm.size()));
  detail::WaksmanRouter router(net.gates);
  router.route(identity_permutation(perm.size()), perm, 0);
  return net;
}

template <class T>
std::vector<T> apply_network(const PermutationNetwork& net, std::vector<T> items) {
  if (items.size() != net.size)
    throw ParameterError("apply_network: expected " + std::to_string(net.size) + " items, got " +
                         std::to_string(items.size()));
  for (const auto& gate : net.gates)
    if (gate.cross) std::swap(items[gate.a], items[gate.b]);
  return items;
}

inline Permutation network_permutation(const PermutationNetwork& net) {
  return apply_network(net, identity_permutation(net.size));
}

/// True when `net` has exactly the switch layout of a size-N network.
/// Anything else (missing, extra or rewired switches) is malformed.
inline bool has_canonical_topology(const PermutationNetwork& net) {
  const auto reference = build_network(identity_permutation(net.size));
  if (reference.gates.size() != net.gates.size()) return false;
  for (std::size_t i = 0; i < net.gates.size(); ++i) {
    const auto& a = reference.gates[i];
    const auto& b = net.gates[i];
    if (a.a != b.a || a.b != b.b || a.layer != b.layer) return false;
  }
  return true;
}

inline Permutation sample_uniform_permutation(std::size_t n, Rng& rng) {
  Permutation p = identity_permutation(n);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

inline PermutationNetwork sample_uniform_network(std::size_t n, Rng& rng) {
  return build_network(sample_uniform_permutation(n, rng));
}

}  // namespace rialto
