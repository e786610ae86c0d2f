#pragma once

#include <stdexcept>
#include <string>

namespace dttc {

// Malformed or inconsistent input data (files, labels, taxonomies).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension disagreement between model, taxonomy and features.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values during training or evaluation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dttc
