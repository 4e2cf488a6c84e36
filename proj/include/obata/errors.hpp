#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace obata {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;

  // Chart point at which a sampled evaluation failed, when known.
  const std::vector<double>& point() const { return point_; }
  void set_point(std::vector<double> p) { point_ = std::move(p); }

 private:
  std::vector<double> point_;
};

// Malformed expression text. `position` is a byte offset into the source.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Bad model description: schema, signature/inertia mismatch, invalid fiber.
class ModelError : public Error {
 public:
  using Error::Error;
};

// Evaluation outside the domain of a function or of a chart.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Singular metric, inertia mismatch at runtime, null plane.
class DegenerateError : public Error {
 public:
  using Error::Error;
};

}  // namespace obata
