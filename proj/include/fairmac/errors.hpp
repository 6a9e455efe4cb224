#pragma once

#include <stdexcept>
#include <string>

namespace fairmac {

// Invalid user-supplied configuration (bad counts, non-positive rates, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-positive distances and similar geometric impossibilities.
class GeometryError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Argument outside the mathematical domain of a formula (e.g. negative SNR).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// A node that cannot meet the target rate itself was asked to relay.
class NotAHelperError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Simulator state violated one of its own invariants. Indicates a bug.
class ConsistencyFault : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed input files (topology records, CSV, config documents).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fairmac
