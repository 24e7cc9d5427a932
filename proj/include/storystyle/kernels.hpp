#ifndef STORYSTYLE_KERNELS_HPP
#define STORYSTYLE_KERNELS_HPP

#include "storystyle/matrix.hpp"

namespace storystyle::kernels {

// Linear-algebra kernels behind the model. Every kernel exists twice: a plain
// serial reference under kernels::serial and an OpenMP version parallelized
// over output rows. Each output element is reduced sequentially in k-order by
// a single thread, so the two variants are bit-identical and results do not
// depend on the thread count. tools/bench_kernels compares their throughput.

namespace serial {
/// C = A * B. A: m x k, B: k x n.
void matmul(const Matrix& a, const Matrix& b, Matrix& c);
/// C = A * B^T. A: m x k, B: n x k.
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c);
/// C = A^T * B. A: k x m, B: k x n.
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c);
/// C += A^T * B. A: k x m, B: k x n.
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);
}  // namespace serial

namespace par {
void matmul(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);
}  // namespace par

// Default entry points: dispatch to the OpenMP variant when the output is
// large enough to amortize the fork, otherwise run serially. Always
// bit-identical to the serial reference.
void matmul(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);

inline Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix c;
  matmul(a, b, c);
  return c;
}
inline Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  Matrix c;
  matmul_nt(a, b, c);
  return c;
}
inline Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  Matrix c;
  matmul_tn(a, b, c);
  return c;
}

}  // namespace storystyle::kernels

#endif
