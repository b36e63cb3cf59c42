#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rialto {

// Invalid argument to a protocol or library call.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Fewer shares than the reconstruction threshold.
class InsufficientShares : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Honest prover refuses: the witness is outside the provable range.
class RangeProofError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The ledger contract refused an operation.
class LedgerRejection : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Estimation needs more leaked points than were available.
class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Privacy gain is undefined when the true entropy is not positive.
class UndefinedGain : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A broker-side failure that stops the protocol. Carries the offending
// broker index when one can be named.
class ProtocolAbort : public std::runtime_error {
 public:
  static constexpr std::size_t kNoBroker = static_cast<std::size_t>(-1);

  explicit ProtocolAbort(const std::string& what, std::size_t broker = kNoBroker)
      : std::runtime_error(what), broker_(broker) {}

  std::size_t broker() const noexcept { return broker_; }

 private:
  std::size_t broker_;
};

}  // namespace rialto
