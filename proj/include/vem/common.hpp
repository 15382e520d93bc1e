#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace vem {

/// Points and vectors are always stored with three components; 2D problems
/// keep the third component at zero.
using Vec3 = Eigen::Vector3d;
/// Jacobians use the convention (row i, column j) = d v_i / d x_j.
using Mat3 = Eigen::Matrix3d;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateGradient : public Error {
 public:
  using Error::Error;
};

class OutOfTube : public Error {
 public:
  using Error::Error;
};

class CflViolation : public Error {
 public:
  using Error::Error;
};

class InjectivityViolation : public Error {
 public:
  using Error::Error;
};

class FlowBlowUp : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyTube : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line, int column)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + what),
        line_(line),
        column_(column) {}
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

inline Vec3 make_vec(double x, double y, double z = 0.0) { return Vec3(x, y, z); }

}  // namespace vem
