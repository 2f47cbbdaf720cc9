#pragma once

#include <stdexcept>
#include <string>

namespace emplan {

/// Base for all recoverable planner library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Frenet projection errors.
class AmbiguousProjection : public Error {
 public:
  using Error::Error;
};
class OutOfRange : public Error {
 public:
  using Error::Error;
};
class CurvatureSingularity : public Error {
 public:
  using Error::Error;
};

// Spline errors.
class OutOfDomain : public Error {
 public:
  using Error::Error;
};
class GuidanceDomainMismatch : public Error {
 public:
  using Error::Error;
};
class InfeasibleBox : public Error {
 public:
  using Error::Error;
};

// Lattice errors.
class EmptyRow : public Error {
 public:
  using Error::Error;
};

// Scenario / IO errors.
class ParseError : public Error {
 public:
  using Error::Error;
};
class ValidationError : public Error {
 public:
  using Error::Error;
};
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace emplan
