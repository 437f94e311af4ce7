#pragma once

#include <Eigen/Dense>

#include <sstream>
#include <stdexcept>
#include <string>

namespace grm {

template <class Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// The engine runs in double precision; finite-difference checks need it.
using Real = double;
using Matrix = MatrixX<Real>;
using Vector = VectorX<Real>;

// Dimension mismatch between operands.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Out-of-range class, node or sample index.
class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Malformed file contents.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A file could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration or input data.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  std::ostringstream os;
  os << rows << "x" << cols;
  return os.str();
}

template <class Derived>
std::string shape_of(const Eigen::EigenBase<Derived>& m) {
  return shape_string(m.rows(), m.cols());
}

}  // namespace grm
