#pragma once

#include <stdexcept>
#include <string>

namespace anticonc {

// Base for every failure raised by the library. The CLI maps the concrete
// subclasses onto exit codes.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  using Error::Error;
};

// Work would exceed a configured cap (enumeration size, atom count).
struct ResourceError : Error {
  using Error::Error;
};

// Unsupported or mismatched dimension.
struct DimensionError : Error {
  using Error::Error;
};

// A hypothesis the caller promised does not hold (V <= G, proxy on a
// non-symmetric law).
struct ContractError : Error {
  using Error::Error;
};

}  // namespace anticonc
