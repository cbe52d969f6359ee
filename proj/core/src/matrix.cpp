#include "tsxfidel/matrix.hpp"

#include <string>

#include "tsxfidel/error.hpp"

namespace tsxfidel {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows * cols) {
    throw Error(ErrorCode::kShapeMismatch,
                "matrix " + std::to_string(rows) + "x" + std::to_string(cols) +
                    " given " + std::to_string(values_.size()) + " values");
  }
}

}  // namespace tsxfidel
