#pragma once

#include <cstddef>

// Numerical kernels behind the autodiff ops. The functions in wsseg::kernels
// are the production implementations: their hot loops are OpenMP-parallel
// over disjoint output elements, with a fixed per-element accumulation order
// so results are bitwise identical at any thread count. wsseg::kernels::ref
// holds naive serial implementations kept as a reference for tests and the
// benchmark target.
namespace wsseg::kernels {

/// Number of threads used by parallel kernels. 0 keeps the OpenMP default.
void set_threads(int n);
int threads();
int max_threads();

void conv2d_forward(const double* x, const double* w, const double* b, double* y,
                    int n, int c, int h, int wd, int k, int kh, int kw,
                    int stride, int pad, int oh, int ow);
// Gradient kernels accumulate (+=) into their destination buffers.
void conv2d_backward_input(double* gx, const double* w, const double* gy,
                           int n, int c, int h, int wd, int k, int kh, int kw,
                           int stride, int pad, int oh, int ow);
void conv2d_backward_weights(double* gw, const double* x, const double* gy,
                             int n, int c, int h, int wd, int k, int kh, int kw,
                             int stride, int pad, int oh, int ow);
void conv2d_backward_bias(double* gb, const double* gy, int n, int k, int oh, int ow);

void matmul_forward(const double* a, const double* b, double* c, int m, int kk, int n);
void matmul_backward_a(double* ga, const double* gc, const double* b, int m, int kk, int n);
void matmul_backward_b(double* gb, const double* a, const double* gc, int m, int kk, int n);

/// Deterministic sum: fixed-size chunks are reduced independently (possibly
/// in parallel) and combined in index order, so the result does not depend
/// on the thread count.
double reduce_sum(const double* x, std::size_t n);

namespace ref {

void conv2d_forward(const double* x, const double* w, const double* b, double* y,
                    int n, int c, int h, int wd, int k, int kh, int kw,
                    int stride, int pad, int oh, int ow);
void conv2d_backward_input(double* gx, const double* w, const double* gy,
                           int n, int c, int h, int wd, int k, int kh, int kw,
                           int stride, int pad, int oh, int ow);
void conv2d_backward_weights(double* gw, const double* x, const double* gy,
                             int n, int c, int h, int wd, int k, int kh, int kw,
                             int stride, int pad, int oh, int ow);
void conv2d_backward_bias(double* gb, const double* gy, int n, int k, int oh, int ow);

void matmul_forward(const double* a, const double* b, double* c, int m, int kk, int n);
void matmul_backward_a(double* ga, const double* gc, const double* b, int m, int kk, int n);
void matmul_backward_b(double* gb, const double* a, const double* gc, int m, int kk, int n);

double reduce_sum(const double* x, std::size_t n);

}  // namespace ref

}  // namespace wsseg::kernels
