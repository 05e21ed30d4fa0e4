// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace treenlg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value lies outside the mathematical domain of an operation (log of 0, NaN).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// A numeric argument is out of its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the location when one is known.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Well-formed data that is not licensed by the ontology.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class LexicalizationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint and ontology (or corpus) do not belong together.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

/// Operation not available for the model's mode.
class ModeError : public Error {
 public:
  using Error::Error;
};

}  // namespace treenlg
