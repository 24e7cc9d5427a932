#include "doctest.h"
#include "storystyle/common.hpp"
#include "storystyle/kernels.hpp"

using namespace storystyle;

namespace {

Matrix random_matrix(int r, int c, Rng& rng) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (int p = 0; p < a.cols(); ++p) acc += a(i, p) * b(p, j);
      c(i, j) = acc;
    }
  return c;
}

}  // namespace

TEST_CASE("matmul matches a naive triple loop") {
  Rng rng(1);
  const Matrix a = random_matrix(7, 5, rng);
  const Matrix b = random_matrix(5, 9, rng);
  Matrix c;
  kernels::matmul(a, b, c);
  const Matrix ref = naive_matmul(a, b);
  for (int i = 0; i < c.rows(); ++i)
    for (int j = 0; j < c.cols(); ++j)
      CHECK(c(i, j) == doctest::Approx(ref(i, j)).epsilon(1e-12));
}

TEST_CASE("serial and parallel kernels are bit-identical") {
  Rng rng(2);
  for (const auto& [m, k, n] :
       {std::tuple{3, 4, 5}, std::tuple{64, 64, 64}, std::tuple{1, 200, 300},
        std::tuple{129, 33, 65}}) {
    const Matrix a = random_matrix(m, k, rng);
    const Matrix b = random_matrix(k, n, rng);
    Matrix cs, cp;
    kernels::serial::matmul(a, b, cs);
    kernels::par::matmul(a, b, cp);
    CHECK(cs == cp);

    const Matrix bt = random_matrix(n, k, rng);
    Matrix ds, dp;
    kernels::serial::matmul_nt(a, bt, ds);
    kernels::par::matmul_nt(a, bt, dp);
    CHECK(ds == dp);

    const Matrix at = random_matrix(k, m, rng);
    Matrix es, ep;
    kernels::serial::matmul_tn(at, b, es);
    kernels::par::matmul_tn(at, b, ep);
    CHECK(es == ep);

    Matrix fs(m, n, 0.5), fp(m, n, 0.5);
    kernels::serial::matmul_tn_acc(at, b, fs);
    kernels::par::matmul_tn_acc(at, b, fp);
    CHECK(fs == fp);
  }
}

TEST_CASE("transpose variants agree with explicit transposes") {
  Rng rng(3);
  const Matrix a = random_matrix(6, 4, rng);
  const Matrix b = random_matrix(8, 4, rng);
  // a * b^T via matmul against materialized transpose
  Matrix bt(b.cols(), b.rows());
  for (int i = 0; i < b.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) bt(j, i) = b(i, j);
  Matrix c1, c2;
  kernels::matmul_nt(a, b, c1);
  kernels::matmul(a, bt, c2);
  for (int i = 0; i < c1.rows(); ++i)
    for (int j = 0; j < c1.cols(); ++j)
      CHECK(c1(i, j) == doctest::Approx(c2(i, j)).epsilon(1e-12));
}

TEST_CASE("rng shuffle and draws are deterministic per seed") {
  Rng r1(42), r2(42);
  std::vector<int> a{1, 2, 3, 4, 5, 6, 7, 8}, b = a;
  r1.shuffle(a);
  r2.shuffle(b);
  CHECK(a == b);
  for (int i = 0; i < 100; ++i) CHECK(r1.u64() == r2.u64());
}

TEST_CASE("rng below is in range and unbiased-ish") {
  Rng rng(7);
  std::vector<int> hist(5, 0);
  for (int i = 0; i < 50000; ++i) ++hist[static_cast<std::size_t>(rng.below(5))];
  for (int h : hist) {
    CHECK(h > 9000);
    CHECK(h < 11000);
  }
}
