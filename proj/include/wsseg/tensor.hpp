#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace wsseg::ad {

/// Dense n-dimensional double tensor participating in a reverse-mode
/// differentiation graph. Copies share storage (handle semantics), so a
/// parameter tensor held by a model and by an optimizer is the same object.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(std::vector<std::size_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<std::size_t> shape, double value, bool requires_grad = false);
  static Tensor from(std::vector<std::size_t> shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return d_ != nullptr; }
  const std::vector<std::size_t>& shape() const { return data().shape; }
  std::size_t numel() const { return data().values.size(); }
  std::size_t rank() const { return data().shape.size(); }

  std::vector<double>& values() { return data().values; }
  const std::vector<double>& values() const { return data().values; }
  std::vector<double>& grad() { return data().grad; }
  const std::vector<double>& grad() const { return data().grad; }

  bool requires_grad() const { return data().requires_grad; }
  bool is_leaf() const { return data().is_leaf; }

  /// Scalar tensors only.
  double value() const;

  void zero_grad() { std::fill(grad().begin(), grad().end(), 0.0); }

  bool same_shape(const Tensor& other) const { return shape() == other.shape(); }
  /// Identity (same storage), not value equality.
  bool is(const Tensor& other) const { return d_ == other.d_; }

  bool all_finite_values() const;

 private:
  friend class Graph;
  struct Data {
    std::vector<std::size_t> shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
    bool is_leaf = true;
  };

  Data& data() {
    if (!d_) throw std::runtime_error("use of undefined Tensor");
    return *d_;
  }
  const Data& data() const {
    if (!d_) throw std::runtime_error("use of undefined Tensor");
    return *d_;
  }

  std::shared_ptr<Data> d_;
};

std::string shape_str(const std::vector<std::size_t>& shape);
std::size_t shape_numel(const std::vector<std::size_t>& shape);

/// Resets accumulated gradients of the given tensors (typically parameters).
void zero_grads(const std::vector<Tensor>& tensors);

}  // namespace wsseg::ad
