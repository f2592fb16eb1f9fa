#pragma once

#include <stdexcept>
#include <string>

namespace mobolfi {

/// Precondition broken by the caller (dimension mismatch, bad bounds, ...).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Numerical failure that survived every recovery attempt (jitter, restarts).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration or input-data problem detected at load time.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A simulator call failed; carries the seed so the failure can be replayed.
class SimulationError : public std::runtime_error {
 public:
  SimulationError(const std::string& what, unsigned long long seed)
      : std::runtime_error(what + " (seed " + std::to_string(seed) + ")"), seed_(seed) {}
  unsigned long long seed() const noexcept { return seed_; }

 private:
  unsigned long long seed_;
};

/// Requested operation is not available for this run (e.g. per-source
/// likelihood on a scalar-discrepancy run).
class CapabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system failure: unreadable input, unwritable output directory.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A run directory whose manifest does not report a completed run.
class IncompleteRunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const char* msg) {
  if (!cond) throw ContractViolation(msg);
}
inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractViolation(msg);
}

}  // namespace mobolfi
