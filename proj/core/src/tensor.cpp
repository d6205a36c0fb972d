#include "adcnn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace adcnn {

std::size_t shape_volume(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

void require_shape(const Shape& actual, const Shape& expected, const char* what) {
  if (actual != expected) {
    throw DimensionError(std::string(what) + ": expected shape " + shape_string(expected) +
                         ", got " + shape_string(actual));
  }
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, T fill) : shape_(std::move(shape)) {
  for (std::size_t d : shape_) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive: " + shape_string(shape_));
  }
  values_.assign(shape_volume(shape_), fill);
}

template <typename T>
BasicTensor<T>::BasicTensor(Shape shape, std::vector<T> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  for (std::size_t d : shape_) {
    if (d == 0) throw DimensionError("tensor dimensions must be positive: " + shape_string(shape_));
  }
  if (shape_volume(shape_) != values_.size()) {
    throw DimensionError("shape " + shape_string(shape_) + " does not hold " +
                         std::to_string(values_.size()) + " elements");
  }
}

template <typename T>
std::size_t BasicTensor<T>::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + shape_string(shape_));
  }
  return shape_[axis];
}

template <typename T>
void BasicTensor<T>::fill(T value) {
  std::fill(values_.begin(), values_.end(), value);
}

template <typename T>
void BasicTensor<T>::reshape(Shape shape) {
  if (shape_volume(shape) != values_.size()) {
    throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
  }
  shape_ = std::move(shape);
}

template <typename T>
BasicTensor<T> BasicTensor<T>::reshaped(Shape shape) const {
  BasicTensor copy = *this;
  copy.reshape(std::move(shape));
  return copy;
}

template <typename T>
bool BasicTensor<T>::all_finite() const noexcept {
  for (T v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

template class BasicTensor<float>;
template class BasicTensor<double>;

}  // namespace adcnn
