#include "wsseg/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace wsseg::ad {

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

namespace {
void check_shape(const std::vector<std::size_t>& shape) {
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("tensor dimension extents must be positive, got " + shape_str(shape));
  }
}
}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> shape, bool requires_grad) {
  check_shape(shape);
  Tensor t;
  t.d_ = std::make_shared<Data>();
  std::size_t n = shape_numel(shape);
  t.d_->shape = std::move(shape);
  t.d_->values.assign(n, 0.0);
  t.d_->grad.assign(n, 0.0);
  t.d_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value, bool requires_grad) {
  Tensor t = zeros(std::move(shape), requires_grad);
  std::fill(t.values().begin(), t.values().end(), value);
  return t;
}

Tensor Tensor::from(std::vector<std::size_t> shape, std::vector<double> values,
                    bool requires_grad) {
  check_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw std::invalid_argument("value count " + std::to_string(values.size()) +
                                " does not match shape " + shape_str(shape));
  }
  Tensor t;
  t.d_ = std::make_shared<Data>();
  t.d_->shape = std::move(shape);
  t.d_->grad.assign(values.size(), 0.0);
  t.d_->values = std::move(values);
  t.d_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

double Tensor::value() const {
  if (numel() != 1) {
    throw std::invalid_argument("scalar access on tensor of shape " + shape_str(shape()));
  }
  return values()[0];
}

bool Tensor::all_finite_values() const {
  return std::all_of(values().begin(), values().end(),
                     [](double v) { return std::isfinite(v); });
}

void zero_grads(const std::vector<Tensor>& tensors) {
  for (Tensor t : tensors) t.zero_grad();
}

}  // namespace wsseg::ad
