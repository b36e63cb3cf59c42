#pragma once

#include <sodium.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <limits>
#include <span>
#include <string_view>

#include "rialto/bytes.hpp"

namespace rialto {

/// Deterministic ChaCha20 keystream generator.
///
/// Every protocol operation that needs randomness takes an explicit `Rng&`,
/// so a run is fully reproducible from its seed. Satisfies
/// UniformRandomBitGenerator and can drive <random> distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) {
    detail::sodium_ready();
    Bytes material;
    for (char c : std::string_view("rialto/rng")) material.push_back(static_cast<std::uint8_t>(c));
    put_u64_be(material, seed);
    key_ = sha256(material);
  }

  explicit Rng(const Digest256& key) : key_(key) { detail::sodium_ready(); }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::array<std::uint8_t, 8> raw{};
    fill(raw);
    std::uint64_t v = 0;
    std::memcpy(&v, raw.data(), sizeof v);
    return v;
  }

  void fill(std::span<std::uint8_t> out) {
    for (auto& b : out) {
      if (pos_ == buffer_.size()) refill();
      b = buffer_[pos_++];
    }
  }

  /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound) {
    if (bound == 0) throw ParameterError("Rng::below: bound must be positive");
    const std::uint64_t limit = max() - (max() % bound);
    for (;;) {
      std::uint64_t v = (*this)();
      if (v < limit) return v % bound;
    }
  }

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Independent child stream, keyed by (parent key, label, index).
  Rng fork(std::string_view label, std::uint64_t index = 0) const {
    Bytes material(key_.begin(), key_.end());
    for (char c : label) material.push_back(static_cast<std::uint8_t>(c));
    put_u64_be(material, index);
    return Rng(sha256(material));
  }

 private:
  void refill() {
    static const std::array<std::uint8_t, 256> kZeros{};
    std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> nonce{};
    crypto_stream_chacha20_xor_ic(buffer_.data(), kZeros.data(), buffer_.size(), nonce.data(),
                                  block_, key_.data());
    block_ += buffer_.size() / 64;
    pos_ = 0;
  }

  Digest256 key_{};
  std::array<std::uint8_t, 256> buffer_{};
  std::size_t pos_ = 256;
  std::uint64_t block_ = 0;
};

}  // namespace rialto
