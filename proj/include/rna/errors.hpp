#pragma once

#include <stdexcept>
#include <string>

namespace rna {

// Precondition broken by the caller (bad sizes, non-unit vectors, ...).
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

// Invalid configuration or scene content detected before work starts.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed bytes: bad magic, unsupported version, truncation.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Well-formed file whose contents do not match the expected layout.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A local frame cannot be built (e.g. view direction parallel to a fiber axis).
struct DegenerateFrameError : std::domain_error {
  using std::domain_error::domain_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ContractViolation(message);
}

}  // namespace rna
