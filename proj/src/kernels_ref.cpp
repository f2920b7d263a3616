#include "wsseg/kernels.hpp"

// Naive serial reference. Forward loops mirror the production gather order;
// the backward passes are written in scatter form (walk the outputs, push
// each contribution to its source), which is the transparent transcription
// of the chain rule and serves as an independent check of the production
// gather kernels.
namespace wsseg::kernels::ref {

void conv2d_forward(const double* x, const double* w, const double* b, double* y,
                    int n, int c, int h, int wd, int k, int kh, int kw,
                    int stride, int pad, int oh, int ow) {
  for (int nn = 0; nn < n; ++nn) {
    for (int kk = 0; kk < k; ++kk) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          double acc = b ? b[kk] : 0.0;
          for (int cc = 0; cc < c; ++cc) {
            for (int i = 0; i < kh; ++i) {
              for (int j = 0; j < kw; ++j) {
                const int iy = oy * stride - pad + i;
                const int ix = ox * stride - pad + j;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                acc += x[((static_cast<std::size_t>(nn) * c + cc) * h + iy) * wd + ix] *
                       w[((static_cast<std::size_t>(kk) * c + cc) * kh + i) * kw + j];
              }
            }
          }
          y[((static_cast<std::size_t>(nn) * k + kk) * oh + oy) * ow + ox] = acc;
        }
      }
    }
  }
}

void conv2d_backward_input(double* gx, const double* w, const double* gy,
                           int n, int c, int h, int wd, int k, int kh, int kw,
                           int stride, int pad, int oh, int ow) {
  for (int nn = 0; nn < n; ++nn) {
    for (int kk = 0; kk < k; ++kk) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const double g = gy[((static_cast<std::size_t>(nn) * k + kk) * oh + oy) * ow + ox];
          for (int cc = 0; cc < c; ++cc) {
            for (int i = 0; i < kh; ++i) {
              for (int j = 0; j < kw; ++j) {
                const int iy = oy * stride - pad + i;
                const int ix = ox * stride - pad + j;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                gx[((static_cast<std::size_t>(nn) * c + cc) * h + iy) * wd + ix] +=
                    g * w[((static_cast<std::size_t>(kk) * c + cc) * kh + i) * kw + j];
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_weights(double* gw, const double* x, const double* gy,
                             int n, int c, int h, int wd, int k, int kh, int kw,
                             int stride, int pad, int oh, int ow) {
  for (int nn = 0; nn < n; ++nn) {
    for (int kk = 0; kk < k; ++kk) {
      for (int oy = 0; oy < oh; ++oy) {
        for (int ox = 0; ox < ow; ++ox) {
          const double g = gy[((static_cast<std::size_t>(nn) * k + kk) * oh + oy) * ow + ox];
          for (int cc = 0; cc < c; ++cc) {
            for (int i = 0; i < kh; ++i) {
              for (int j = 0; j < kw; ++j) {
                const int iy = oy * stride - pad + i;
                const int ix = ox * stride - pad + j;
                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                gw[((static_cast<std::size_t>(kk) * c + cc) * kh + i) * kw + j] +=
                    g * x[((static_cast<std::size_t>(nn) * c + cc) * h + iy) * wd + ix];
              }
            }
          }
        }
      }
    }
  }
}

void conv2d_backward_bias(double* gb, const double* gy, int n, int k, int oh, int ow) {
  for (int nn = 0; nn < n; ++nn) {
    for (int kk = 0; kk < k; ++kk) {
      for (int i = 0; i < oh * ow; ++i) {
        gb[kk] += gy[(static_cast<std::size_t>(nn) * k + kk) * oh * ow + i];
      }
    }
  }
}

void matmul_forward(const double* a, const double* b, double* c, int m, int kk, int n) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < kk; ++p) {
        acc += a[static_cast<std::size_t>(i) * kk + p] * b[static_cast<std::size_t>(p) * n + j];
      }
      c[static_cast<std::size_t>(i) * n + j] = acc;
    }
  }
}

void matmul_backward_a(double* ga, const double* gc, const double* b, int m, int kk, int n) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const double g = gc[static_cast<std::size_t>(i) * n + j];
      for (int p = 0; p < kk; ++p) {
        ga[static_cast<std::size_t>(i) * kk + p] += g * b[static_cast<std::size_t>(p) * n + j];
      }
    }
  }
}

void matmul_backward_b(double* gb, const double* a, const double* gc, int m, int kk, int n) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      const double g = gc[static_cast<std::size_t>(i) * n + j];
      for (int p = 0; p < kk; ++p) {
        gb[static_cast<std::size_t>(p) * n + j] += a[static_cast<std::size_t>(i) * kk + p] * g;
      }
    }
  }
}

double reduce_sum(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

}  // namespace wsseg::kernels::ref
