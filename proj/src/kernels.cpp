#include "storystyle/kernels.hpp"

#include <cassert>
#include <cstdint>

namespace storystyle::kernels {

namespace {
// One row of C = A * B, reduced in k-order.
inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& c, int i) {
  const int k = a.cols();
  const int n = b.cols();
  double* crow = c.row(i);
  const double* arow = a.row(i);
  for (int j = 0; j < n; ++j) crow[j] = 0.0;
  for (int p = 0; p < k; ++p) {
    const double av = arow[p];
    if (av == 0.0) continue;
    const double* brow = b.row(p);
    for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
  }
}

inline void matmul_nt_row(const Matrix& a, const Matrix& b, Matrix& c, int i) {
  const int k = a.cols();
  const int n = b.rows();
  double* crow = c.row(i);
  const double* arow = a.row(i);
  for (int j = 0; j < n; ++j) {
    const double* brow = b.row(j);
    double acc = 0.0;
    for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
    crow[j] = acc;
  }
}

// Row i of C (+)= A^T * B: c[i, :] accumulates a(p, i) * b(p, :) in p-order.
inline void matmul_tn_row(const Matrix& a, const Matrix& b, Matrix& c, int i,
                          bool accumulate) {
  const int k = a.rows();
  const int n = b.cols();
  double* crow = c.row(i);
  if (!accumulate)
    for (int j = 0; j < n; ++j) crow[j] = 0.0;
  for (int p = 0; p < k; ++p) {
    const double av = a(p, i);
    if (av == 0.0) continue;
    const double* brow = b.row(p);
    for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
  }
}

constexpr std::int64_t kParallelFlops = 1 << 16;

inline std::int64_t work(int m, int n, int k) {
  return static_cast<std::int64_t>(m) * n * k;
}
}  // namespace

namespace serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.cols() == b.rows());
  c.resize(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i) matmul_row(a, b, c, i);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.cols() == b.cols());
  c.resize(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i) matmul_nt_row(a, b, c, i);
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.rows() == b.rows());
  c.resize(a.cols(), b.cols());
  for (int i = 0; i < a.cols(); ++i) matmul_tn_row(a, b, c, i, false);
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.rows() == b.rows());
  assert(c.rows() == a.cols() && c.cols() == b.cols());
  for (int i = 0; i < a.cols(); ++i) matmul_tn_row(a, b, c, i, true);
}

}  // namespace serial

namespace par {

void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.cols() == b.rows());
  c.resize(a.rows(), b.cols());
  const int m = a.rows();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) matmul_row(a, b, c, i);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.cols() == b.cols());
  c.resize(a.rows(), b.rows());
  const int m = a.rows();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) matmul_nt_row(a, b, c, i);
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.rows() == b.rows());
  c.resize(a.cols(), b.cols());
  const int m = a.cols();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) matmul_tn_row(a, b, c, i, false);
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  assert(a.rows() == b.rows());
  assert(c.rows() == a.cols() && c.cols() == b.cols());
  const int m = a.cols();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) matmul_tn_row(a, b, c, i, true);
}

}  // namespace par

void matmul(const Matrix& a, const Matrix& b, Matrix& c) {
  if (work(a.rows(), b.cols(), a.cols()) >= kParallelFlops)
    par::matmul(a, b, c);
  else
    serial::matmul(a, b, c);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  if (work(a.rows(), b.rows(), a.cols()) >= kParallelFlops)
    par::matmul_nt(a, b, c);
  else
    serial::matmul_nt(a, b, c);
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  if (work(a.cols(), b.cols(), a.rows()) >= kParallelFlops)
    par::matmul_tn(a, b, c);
  else
    serial::matmul_tn(a, b, c);
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  if (work(a.cols(), b.cols(), a.rows()) >= kParallelFlops)
    par::matmul_tn_acc(a, b, c);
  else
    serial::matmul_tn_acc(a, b, c);
}

}  // namespace storystyle::kernels
