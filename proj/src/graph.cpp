#include "wsseg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "wsseg/kernels.hpp"

namespace wsseg::ad {

namespace {

// Sigmoid outputs are snapped to this grid. Any y = j * 2^-46 with
// 0 < j < 2^46 has an exactly representable complement 1 - y, which makes
// mask complementation a bitwise involution.
constexpr double kSigmoidGrid = 0x1p46;
constexpr double kSigmoidEps = 0x1p-46;

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string("shape mismatch in ") + op + ": " +
                              shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    throw std::invalid_argument(std::string(op) + " expects rank-" + std::to_string(rank) +
                                " tensor, got shape " + shape_str(t.shape()));
  }
}

}  // namespace

Tensor Graph::result(std::vector<std::size_t> shape) {
  Tensor t = Tensor::zeros(std::move(shape));
  t.d_->is_leaf = false;
  return t;
}

void Graph::record(std::function<void()> back) {
  if (backward_run_) {
    throw std::runtime_error("graph already ran backward; build a fresh graph");
  }
  tape_.push_back(std::move(back));
}

bool Graph::receives_grad(const Tensor& t) { return !(t.is_leaf() && !t.requires_grad()); }

void Graph::accumulate(Tensor& t, std::size_t i, double v) {
  if (!receives_grad(t)) return;
  t.grad()[i] += v;
}

void Graph::backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw std::invalid_argument("backward requires a scalar loss, got shape " +
                                shape_str(loss.shape()));
  }
  if (backward_run_) {
    throw std::runtime_error("backward already run on this graph");
  }
  backward_run_ = true;
  Tensor l = loss;
  if (receives_grad(l)) l.grad()[0] += 1.0;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
}

// ---------------------------------------------------------------------------
// Elementwise and broadcast ops

namespace {
enum class Broadcast { None, AScalar, BScalar };

Broadcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) {
  if (a.same_shape(b)) return Broadcast::None;
  if (a.numel() == 1) return Broadcast::AScalar;
  if (b.numel() == 1) return Broadcast::BScalar;
  shape_error(op, a, b);
}
}  // namespace

Tensor Graph::add(const Tensor& a, const Tensor& b) {
  const Broadcast bc = broadcast_kind("add", a, b);
  Tensor out = result(bc == Broadcast::AScalar ? b.shape() : a.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) {
    ov[i] = av[bc == Broadcast::AScalar ? 0 : i] + bv[bc == Broadcast::BScalar ? 0 : i];
  }
  record([a, b, out, bc]() mutable {
    const auto& g = out.grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      accumulate(a, bc == Broadcast::AScalar ? 0 : i, g[i]);
      accumulate(b, bc == Broadcast::BScalar ? 0 : i, g[i]);
    }
  });
  return out;
}

Tensor Graph::sub(const Tensor& a, const Tensor& b) {
  const Broadcast bc = broadcast_kind("sub", a, b);
  Tensor out = result(bc == Broadcast::AScalar ? b.shape() : a.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) {
    ov[i] = av[bc == Broadcast::AScalar ? 0 : i] - bv[bc == Broadcast::BScalar ? 0 : i];
  }
  record([a, b, out, bc]() mutable {
    const auto& g = out.grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      accumulate(a, bc == Broadcast::AScalar ? 0 : i, g[i]);
      accumulate(b, bc == Broadcast::BScalar ? 0 : i, -g[i]);
    }
  });
  return out;
}

Tensor Graph::mul(const Tensor& a, const Tensor& b) {
  const Broadcast bc = broadcast_kind("mul", a, b);
  Tensor out = result(bc == Broadcast::AScalar ? b.shape() : a.shape());
  const auto& av = a.values();
  const auto& bv = b.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) {
    ov[i] = av[bc == Broadcast::AScalar ? 0 : i] * bv[bc == Broadcast::BScalar ? 0 : i];
  }
  record([a, b, out, bc]() mutable {
    const auto& g = out.grad();
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      const std::size_t ia = bc == Broadcast::AScalar ? 0 : i;
      const std::size_t ib = bc == Broadcast::BScalar ? 0 : i;
      accumulate(a, ia, g[i] * bv[ib]);
      accumulate(b, ib, g[i] * av[ia]);
    }
  });
  return out;
}

Tensor Graph::scalar_mul(const Tensor& a, double k) {
  Tensor out = result(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] * k;
  record([a, out, k]() mutable {
    const auto& g = out.grad();
    for (std::size_t i = 0; i < g.size(); ++i) accumulate(a, i, g[i] * k);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Linear algebra and reductions

Tensor Graph::matmul(const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  if (a.shape()[1] != b.shape()[0]) shape_error("matmul (inner dimensions)", a, b);
  const int m = static_cast<int>(a.shape()[0]);
  const int k = static_cast<int>(a.shape()[1]);
  const int n = static_cast<int>(b.shape()[1]);
  Tensor out = result({a.shape()[0], b.shape()[1]});
  kernels::matmul_forward(a.values().data(), b.values().data(), out.values().data(), m, k, n);
  record([a, b, out, m, k, n]() mutable {
    if (receives_grad(a)) {
      kernels::matmul_backward_a(a.grad().data(), out.grad().data(), b.values().data(), m, k, n);
    }
    if (receives_grad(b)) {
      kernels::matmul_backward_b(b.grad().data(), a.values().data(), out.grad().data(), m, k, n);
    }
  });
  return out;
}

Tensor Graph::sum(const Tensor& a) {
  Tensor out = result({1});
  out.values()[0] = kernels::reduce_sum(a.values().data(), a.numel());
  record([a, out]() mutable {
    const double g = out.grad()[0];
    for (std::size_t i = 0; i < a.numel(); ++i) accumulate(a, i, g);
  });
  return out;
}

Tensor Graph::mean(const Tensor& a) {
  const double inv_n = 1.0 / static_cast<double>(a.numel());
  Tensor out = result({1});
  out.values()[0] = kernels::reduce_sum(a.values().data(), a.numel()) * inv_n;
  record([a, out, inv_n]() mutable {
    const double g = out.grad()[0] * inv_n;
    for (std::size_t i = 0; i < a.numel(); ++i) accumulate(a, i, g);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Convolution

Tensor Graph::conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  require_rank("conv2d input", x, 4);
  require_rank("conv2d weights", w, 4);
  require_rank("conv2d bias", b, 1);
  if (stride < 1) throw std::invalid_argument("conv2d stride must be >= 1");
  if (pad < 0) throw std::invalid_argument("conv2d pad must be >= 0");
  const int n = static_cast<int>(x.shape()[0]);
  const int c = static_cast<int>(x.shape()[1]);
  const int h = static_cast<int>(x.shape()[2]);
  const int wd = static_cast<int>(x.shape()[3]);
  const int k = static_cast<int>(w.shape()[0]);
  const int kh = static_cast<int>(w.shape()[2]);
  const int kw = static_cast<int>(w.shape()[3]);
  if (static_cast<int>(w.shape()[1]) != c) {
    throw std::invalid_argument("conv2d channel mismatch: input " + shape_str(x.shape()) +
                                " vs weights " + shape_str(w.shape()));
  }
  if (static_cast<int>(b.shape()[0]) != k) {
    throw std::invalid_argument("conv2d bias size " + shape_str(b.shape()) +
                                " does not match " + std::to_string(k) + " kernels");
  }
  if (kh > h + 2 * pad || kw > wd + 2 * pad) {
    throw std::invalid_argument("conv2d kernel " + shape_str(w.shape()) +
                                " larger than padded input " + shape_str(x.shape()));
  }
  if ((h + 2 * pad - kh) % stride != 0 || (wd + 2 * pad - kw) % stride != 0) {
    throw std::invalid_argument(
        "conv2d output size not exact: input " + shape_str(x.shape()) + ", kernel " +
        shape_str(w.shape()) + ", stride " + std::to_string(stride) + ", pad " +
        std::to_string(pad));
  }
  const int oh = (h + 2 * pad - kh) / stride + 1;
  const int ow = (wd + 2 * pad - kw) / stride + 1;
  Tensor out = result({static_cast<std::size_t>(n), static_cast<std::size_t>(k),
                       static_cast<std::size_t>(oh), static_cast<std::size_t>(ow)});
  kernels::conv2d_forward(x.values().data(), w.values().data(), b.values().data(),
                          out.values().data(), n, c, h, wd, k, kh, kw, stride, pad, oh, ow);
  record([x, w, b, out, n, c, h, wd, k, kh, kw, stride, pad, oh, ow]() mutable {
    const double* gy = out.grad().data();
    if (receives_grad(x)) {
      kernels::conv2d_backward_input(x.grad().data(), w.values().data(), gy, n, c, h, wd, k, kh,
                                     kw, stride, pad, oh, ow);
    }
    if (receives_grad(w)) {
      kernels::conv2d_backward_weights(w.grad().data(), x.values().data(), gy, n, c, h, wd, k,
                                       kh, kw, stride, pad, oh, ow);
    }
    if (receives_grad(b)) {
      kernels::conv2d_backward_bias(b.grad().data(), gy, n, k, oh, ow);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Nonlinearities

Tensor Graph::sigmoid(const Tensor& a) {
  Tensor out = result(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) {
    const double x = av[i];
    double y;
    if (x >= 0.0) {
      y = 1.0 / (1.0 + std::exp(-x));
    } else {
      const double e = std::exp(x);
      y = e / (1.0 + e);
    }
    y = std::nearbyint(y * kSigmoidGrid) / kSigmoidGrid;
    ov[i] = std::clamp(y, kSigmoidEps, 1.0 - kSigmoidEps);
  }
  record([a, out]() mutable {
    const auto& g = out.grad();
    const auto& y = out.values();
    for (std::size_t i = 0; i < g.size(); ++i) accumulate(a, i, g[i] * y[i] * (1.0 - y[i]));
  });
  return out;
}

Tensor Graph::relu(const Tensor& a) {
  Tensor out = result(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = av[i] > 0.0 ? av[i] : 0.0;
  record([a, out]() mutable {
    const auto& g = out.grad();
    const auto& av = a.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (av[i] > 0.0) accumulate(a, i, g[i]);
    }
  });
  return out;
}

Tensor Graph::log(const Tensor& a) {
  const auto& av = a.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    if (!(av[i] > 0.0)) {
      throw std::invalid_argument("log requires strictly positive inputs, got " +
                                  std::to_string(av[i]) + " at index " + std::to_string(i));
    }
  }
  Tensor out = result(a.shape());
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::log(av[i]);
  record([a, out]() mutable {
    const auto& g = out.grad();
    const auto& av = a.values();
    for (std::size_t i = 0; i < g.size(); ++i) accumulate(a, i, g[i] / av[i]);
  });
  return out;
}

Tensor Graph::log_clamped(const Tensor& a, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("log_clamped eps must be positive");
  Tensor out = result(a.shape());
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = std::log(std::max(av[i], eps));
  record([a, out, eps]() mutable {
    const auto& g = out.grad();
    const auto& av = a.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (av[i] >= eps) accumulate(a, i, g[i] / av[i]);
    }
  });
  return out;
}

Tensor Graph::softmax(const Tensor& logits) {
  require_rank("softmax", logits, 1);
  if (!logits.all_finite_values()) throw std::invalid_argument("softmax requires finite logits");
  Tensor out = result(logits.shape());
  const auto& lv = logits.values();
  auto& ov = out.values();
  const double mx = *std::max_element(lv.begin(), lv.end());
  double denom = 0.0;
  for (std::size_t i = 0; i < lv.size(); ++i) {
    ov[i] = std::exp(lv[i] - mx);
    denom += ov[i];
  }
  for (double& v : ov) v /= denom;
  record([logits, out]() mutable {
    const auto& g = out.grad();
    const auto& y = out.values();
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * y[i];
    for (std::size_t i = 0; i < g.size(); ++i) accumulate(logits, i, y[i] * (g[i] - dot));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Shape and spatial ops

Tensor Graph::reshape(const Tensor& a, std::vector<std::size_t> shape) {
  if (shape_numel(shape) != a.numel()) {
    throw std::invalid_argument("reshape from " + shape_str(a.shape()) + " to " +
                                shape_str(shape) + " changes element count");
  }
  Tensor out = result(std::move(shape));
  out.values() = a.values();
  record([a, out]() mutable {
    const auto& g = out.grad();
    for (std::size_t i = 0; i < g.size(); ++i) accumulate(a, i, g[i]);
  });
  return out;
}

Tensor Graph::upsample2x(const Tensor& a) {
  require_rank("upsample2x", a, 4);
  const std::size_t n = a.shape()[0], c = a.shape()[1], h = a.shape()[2], w = a.shape()[3];
  Tensor out = result({n, c, 2 * h, 2 * w});
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t nc = 0; nc < n * c; ++nc) {
    const double* src = av.data() + nc * h * w;
    double* dst = ov.data() + nc * 4 * h * w;
    for (std::size_t y = 0; y < 2 * h; ++y) {
      for (std::size_t x = 0; x < 2 * w; ++x) {
        dst[y * 2 * w + x] = src[(y / 2) * w + (x / 2)];
      }
    }
  }
  record([a, out, n, c, h, w]() mutable {
    const auto& g = out.grad();
    for (std::size_t nc = 0; nc < n * c; ++nc) {
      const double* gsrc = g.data() + nc * 4 * h * w;
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          const double acc = gsrc[(2 * y) * 2 * w + 2 * x] + gsrc[(2 * y) * 2 * w + 2 * x + 1] +
                             gsrc[(2 * y + 1) * 2 * w + 2 * x] +
                             gsrc[(2 * y + 1) * 2 * w + 2 * x + 1];
          accumulate(a, nc * h * w + y * w + x, acc);
        }
      }
    }
  });
  return out;
}

Tensor Graph::global_avg_pool(const Tensor& a) {
  require_rank("global_avg_pool", a, 4);
  const std::size_t n = a.shape()[0], c = a.shape()[1];
  const std::size_t hw = a.shape()[2] * a.shape()[3];
  const double inv = 1.0 / static_cast<double>(hw);
  Tensor out = result({n, c});
  const auto& av = a.values();
  auto& ov = out.values();
  for (std::size_t nc = 0; nc < n * c; ++nc) {
    ov[nc] = kernels::reduce_sum(av.data() + nc * hw, hw) * inv;
  }
  record([a, out, hw, inv]() mutable {
    const auto& g = out.grad();
    for (std::size_t nc = 0; nc < g.size(); ++nc) {
      const double gv = g[nc] * inv;
      for (std::size_t i = 0; i < hw; ++i) accumulate(a, nc * hw + i, gv);
    }
  });
  return out;
}

Tensor Graph::spatial_gate(const Tensor& x, const Tensor& m) {
  require_rank("spatial_gate mask", m, 2);
  if (x.rank() != 3 && x.rank() != 4) {
    throw std::invalid_argument("spatial_gate expects [C,H,W] or [N,C,H,W] input, got " +
                                shape_str(x.shape()));
  }
  const std::size_t h = x.shape()[x.rank() - 2];
  const std::size_t w = x.shape()[x.rank() - 1];
  if (m.shape()[0] != h || m.shape()[1] != w) shape_error("spatial_gate (spatial dims)", x, m);
  const std::size_t planes = x.numel() / (h * w);
  Tensor out = result(x.shape());
  const auto& xv = x.values();
  const auto& mv = m.values();
  auto& ov = out.values();
  for (std::size_t p = 0; p < planes; ++p) {
    for (std::size_t i = 0; i < h * w; ++i) ov[p * h * w + i] = xv[p * h * w + i] * mv[i];
  }
  record([x, m, out, planes, h, w]() mutable {
    const auto& g = out.grad();
    const auto& xv = x.values();
    const auto& mv = m.values();
    for (std::size_t p = 0; p < planes; ++p) {
      for (std::size_t i = 0; i < h * w; ++i) {
        accumulate(x, p * h * w + i, g[p * h * w + i] * mv[i]);
      }
    }
    if (receives_grad(m)) {
      for (std::size_t i = 0; i < h * w; ++i) {
        double acc = 0.0;
        for (std::size_t p = 0; p < planes; ++p) acc += g[p * h * w + i] * xv[p * h * w + i];
        m.grad()[i] += acc;
      }
    }
  });
  return out;
}

}  // namespace wsseg::ad
