#pragma once

#include <functional>
#include <vector>

#include "wsseg/tensor.hpp"

namespace wsseg::ad {

/// Reverse-mode differentiation tape. Ops append one record per result in
/// creation order; backward() replays the records in strict reverse order.
///
/// Gradient contract:
///  - gradients accumulate (+=) into tensors across backward calls on
///    distinct graphs; zero_grads() resets them between optimizer steps.
///  - a second backward() on the same graph is rejected.
///  - leaves with requires_grad == false never receive gradient.
///
/// A graph is single-threaded during forward and backward; distinct graphs
/// on distinct threads are independent.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Elementwise; operands must have equal shapes, or one side may be a
  // scalar (single-element) tensor.
  Tensor add(const Tensor& a, const Tensor& b);
  Tensor sub(const Tensor& a, const Tensor& b);
  Tensor mul(const Tensor& a, const Tensor& b);
  Tensor scalar_mul(const Tensor& a, double k);

  Tensor matmul(const Tensor& a, const Tensor& b);
  Tensor sum(const Tensor& a);
  Tensor mean(const Tensor& a);

  /// Cross-correlation. x:[N,C,H,W], w:[K,C,kh,kw], b:[K].
  /// Output size (H + 2 pad - kh) / stride + 1 must be exact.
  Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad);

  /// Outputs are snapped to the 2^-46 grid and clamped to
  /// [2^-46, 1 - 2^-46], so no stored value is exactly 0 or 1 and the
  /// complement 1 - y is exact in double arithmetic.
  Tensor sigmoid(const Tensor& a);
  Tensor relu(const Tensor& a);
  /// Strictly positive inputs required; use log_clamped when inputs may
  /// touch zero.
  Tensor log(const Tensor& a);
  /// log(max(a, eps)); gradient is 1/a above eps and 0 below.
  Tensor log_clamped(const Tensor& a, double eps = 1e-12);

  /// 1-D logits -> simplex point, stabilized by max subtraction.
  Tensor softmax(const Tensor& logits);

  Tensor reshape(const Tensor& a, std::vector<std::size_t> shape);
  /// Nearest-neighbour 2x upsampling of [N,C,H,W].
  Tensor upsample2x(const Tensor& a);
  /// [N,C,H,W] -> [N,C] spatial mean.
  Tensor global_avg_pool(const Tensor& a);
  /// Per-pixel gating: out(...,z) = x(...,z) * m(z) for x of rank 3 [C,H,W]
  /// or rank 4 [N,C,H,W] and m of rank 2 [H,W]. Differentiable in both.
  Tensor spatial_gate(const Tensor& x, const Tensor& m);

  /// Seeds d(loss)/d(loss) = 1 and replays the tape in reverse, adding
  /// gradients into every tensor that can receive one. Loss must be scalar.
  void backward(const Tensor& loss);

  std::size_t num_nodes() const { return tape_.size(); }
  bool backward_run() const { return backward_run_; }

 private:
  Tensor result(std::vector<std::size_t> shape);
  void record(std::function<void()> back);
  // += into t.grad unless t is a leaf that does not require grad.
  static void accumulate(Tensor& t, std::size_t i, double v);
  static bool receives_grad(const Tensor& t);

  std::vector<std::function<void()>> tape_;
  bool backward_run_ = false;
};

}  // namespace wsseg::ad
