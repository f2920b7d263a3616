#include "wsseg/kernels.hpp"

#include <algorithm>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace wsseg::kernels {

namespace {
int g_threads = 0;  // 0 = OpenMP default
}

void set_threads(int n) {
  g_threads = std::max(0, n);
#if defined(_OPENMP)
  if (g_threads > 0) omp_set_num_threads(g_threads);
#endif
}

int threads() { return g_threads; }

int max_threads() {
#if defined(_OPENMP)
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Every parallel loop below runs over disjoint output elements and keeps the
// inner accumulation order fixed, so results are bitwise independent of the
// thread count.

void conv2d_forward(const double* x, const double* w, const double* b, double* y,
                    int n, int c, int h, int wd, int k, int kh, int kw,
                    int stride, int pad, int oh, int ow) {
  const long rows = static_cast<long>(n) * k * oh;
#pragma omp parallel for schedule(static)
  for (long row = 0; row < rows; ++row) {
    const int oy = static_cast<int>(row % oh);
    const int kk = static_cast<int>((row / oh) % k);
    const int nn = static_cast<int>(row / (static_cast<long>(oh) * k));
    const double* wk = w + static_cast<std::size_t>(kk) * c * kh * kw;
    double* yrow = y + ((static_cast<std::size_t>(nn) * k + kk) * oh + oy) * ow;
    for (int ox = 0; ox < ow; ++ox) {
      double acc = b ? b[kk] : 0.0;
      const int iy0 = oy * stride - pad;
      const int ix0 = ox * stride - pad;
      for (int cc = 0; cc < c; ++cc) {
        const double* xc = x + (static_cast<std::size_t>(nn) * c + cc) * h * wd;
        const double* wc = wk + static_cast<std::size_t>(cc) * kh * kw;
        for (int i = 0; i < kh; ++i) {
          const int iy = iy0 + i;
          if (iy < 0 || iy >= h) continue;
          for (int j = 0; j < kw; ++j) {
            const int ix = ix0 + j;
            if (ix < 0 || ix >= wd) continue;
            acc += xc[static_cast<std::size_t>(iy) * wd + ix] * wc[i * kw + j];
          }
        }
      }
      yrow[ox] = acc;
    }
  }
}

void conv2d_backward_input(double* gx, const double* w, const double* gy,
                           int n, int c, int h, int wd, int k, int kh, int kw,
                           int stride, int pad, int oh, int ow) {
  const long rows = static_cast<long>(n) * c * h;
#pragma omp parallel for schedule(static)
  for (long row = 0; row < rows; ++row) {
    const int iy = static_cast<int>(row % h);
    const int cc = static_cast<int>((row / h) % c);
    const int nn = static_cast<int>(row / (static_cast<long>(h) * c));
    double* gxrow = gx + ((static_cast<std::size_t>(nn) * c + cc) * h + iy) * wd;
    for (int ix = 0; ix < wd; ++ix) {
      double acc = 0.0;
      for (int kk = 0; kk < k; ++kk) {
        const double* wc = w + (static_cast<std::size_t>(kk) * c + cc) * kh * kw;
        const double* gyk = gy + (static_cast<std::size_t>(nn) * k + kk) * oh * ow;
        for (int i = 0; i < kh; ++i) {
          const int num_y = iy + pad - i;
          if (num_y < 0 || num_y % stride != 0) continue;
          const int oy = num_y / stride;
          if (oy >= oh) continue;
          for (int j = 0; j < kw; ++j) {
            const int num_x = ix + pad - j;
            if (num_x < 0 || num_x % stride != 0) continue;
            const int ox = num_x / stride;
            if (ox >= ow) continue;
            acc += gyk[static_cast<std::size_t>(oy) * ow + ox] * wc[i * kw + j];
          }
        }
      }
      gxrow[ix] += acc;
    }
  }
}

void conv2d_backward_weights(double* gw, const double* x, const double* gy,
                             int n, int c, int h, int wd, int k, int kh, int kw,
                             int stride, int pad, int oh, int ow) {
  const long wcount = static_cast<long>(k) * c * kh * kw;
#pragma omp parallel for schedule(static)
  for (long idx = 0; idx < wcount; ++idx) {
    const int j = static_cast<int>(idx % kw);
    const int i = static_cast<int>((idx / kw) % kh);
    const int cc = static_cast<int>((idx / (static_cast<long>(kw) * kh)) % c);
    const int kk = static_cast<int>(idx / (static_cast<long>(kw) * kh * c));
    double acc = 0.0;
    for (int nn = 0; nn < n; ++nn) {
      const double* xc = x + (static_cast<std::size_t>(nn) * c + cc) * h * wd;
      const double* gyk = gy + (static_cast<std::size_t>(nn) * k + kk) * oh * ow;
      for (int oy = 0; oy < oh; ++oy) {
        const int iy = oy * stride - pad + i;
        if (iy < 0 || iy >= h) continue;
        for (int ox = 0; ox < ow; ++ox) {
          const int ix = ox * stride - pad + j;
          if (ix < 0 || ix >= wd) continue;
          acc += gyk[static_cast<std::size_t>(oy) * ow + ox] *
                 xc[static_cast<std::size_t>(iy) * wd + ix];
        }
      }
    }
    gw[idx] += acc;
  }
}

void conv2d_backward_bias(double* gb, const double* gy, int n, int k, int oh, int ow) {
#pragma omp parallel for schedule(static)
  for (int kk = 0; kk < k; ++kk) {
    double acc = 0.0;
    for (int nn = 0; nn < n; ++nn) {
      const double* gyk = gy + (static_cast<std::size_t>(nn) * k + kk) * oh * ow;
      for (int i = 0; i < oh * ow; ++i) acc += gyk[i];
    }
    gb[kk] += acc;
  }
}

void matmul_forward(const double* a, const double* b, double* c, int m, int kk, int n) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<std::size_t>(i) * kk;
    double* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int p = 0; p < kk; ++p) acc += arow[p] * b[static_cast<std::size_t>(p) * n + j];
      crow[j] = acc;
    }
  }
}

void matmul_backward_a(double* ga, const double* gc, const double* b, int m, int kk, int n) {
  // ga[i,p] += sum_j gc[i,j] b[p,j]
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    const double* gcrow = gc + static_cast<std::size_t>(i) * n;
    double* garow = ga + static_cast<std::size_t>(i) * kk;
    for (int p = 0; p < kk; ++p) {
      double acc = 0.0;
      const double* brow = b + static_cast<std::size_t>(p) * n;
      for (int j = 0; j < n; ++j) acc += gcrow[j] * brow[j];
      garow[p] += acc;
    }
  }
}

void matmul_backward_b(double* gb, const double* a, const double* gc, int m, int kk, int n) {
  // gb[p,j] += sum_i a[i,p] gc[i,j]
#pragma omp parallel for schedule(static)
  for (int p = 0; p < kk; ++p) {
    double* gbrow = gb + static_cast<std::size_t>(p) * n;
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int i = 0; i < m; ++i) {
        acc += a[static_cast<std::size_t>(i) * kk + p] * gc[static_cast<std::size_t>(i) * n + j];
      }
      gbrow[j] += acc;
    }
  }
}

double reduce_sum(const double* x, std::size_t n) {
  constexpr std::size_t kChunk = 4096;
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  if (chunks <= 1) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
  }
  std::vector<double> partial(chunks, 0.0);
#pragma omp parallel for schedule(static)
  for (long ci = 0; ci < static_cast<long>(chunks); ++ci) {
    const std::size_t lo = static_cast<std::size_t>(ci) * kChunk;
    const std::size_t hi = std::min(lo + kChunk, n);
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += x[i];
    partial[static_cast<std::size_t>(ci)] = acc;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace wsseg::kernels
