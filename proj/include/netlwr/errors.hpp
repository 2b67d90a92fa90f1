#pragma once

#include <stdexcept>
#include <string>

namespace netlwr {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A density or flux argument outside its admissible interval.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A flux value that no density can realize (above f_max, or above a demand/supply bound).
class InfeasibleFluxError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid junction description (distribution matrix or priority vector).
class SpecError : public Error {
 public:
  using Error::Error;
};

/// The requested solver cannot handle this junction topology.
class UnsupportedJunctionError : public Error {
 public:
  using Error::Error;
};

/// A caller-side contract was not met (CFL bound, admissibility of a wave, ...).
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Scenario document could not be turned into a valid Scenario.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// An internal numerical invariant broke (maximum principle, recursion bound).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace netlwr
