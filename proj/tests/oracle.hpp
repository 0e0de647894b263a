#pragma once

// Brute-force reference implementations used only by tests. They share no
// code with the library: every index is decoded digit by digit.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

namespace oracle {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;

inline std::vector<int> digits(long index, const std::vector<int>& dims) {
  std::vector<int> out(dims.size());
  for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
    out[k] = static_cast<int>(index % dims[k]);
    index /= dims[k];
  }
  return out;
}

inline long compose(const std::vector<int>& dig, const std::vector<int>& dims) {
  long idx = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) idx = idx * dims[k] + dig[k];
  return idx;
}

inline long total(const std::vector<int>& dims) {
  long n = 1;
  for (int d : dims) n *= d;
  return n;
}

inline Mat kron(const Mat& a, const Mat& b) { return Eigen::kroneckerProduct(a, b).eval(); }

// Sums over matching digits on `traced`, keeping the rest in order.
inline Mat partial_trace(const Mat& a, const std::vector<int>& dims, const std::vector<int>& traced) {
  std::vector<bool> tr(dims.size(), false);
  for (int t : traced) tr[t] = true;
  std::vector<int> kept_dims;
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (!tr[k]) kept_dims.push_back(dims[k]);
  const long n = total(dims);
  Mat out = Mat::Zero(total(kept_dims), total(kept_dims));
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      const auto di = digits(i, dims);
      const auto dj = digits(j, dims);
      bool match = true;
      std::vector<int> ki, kj;
      for (std::size_t k = 0; k < dims.size(); ++k) {
        if (tr[k]) {
          match &= di[k] == dj[k];
        } else {
          ki.push_back(di[k]);
          kj.push_back(dj[k]);
        }
      }
      if (match) out(compose(ki, kept_dims), compose(kj, kept_dims)) += a(i, j);
    }
  return out;
}

inline Mat partial_transpose(const Mat& a, const std::vector<int>& dims, const std::vector<int>& sel) {
  const long n = total(dims);
  Mat out(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      auto di = digits(i, dims);
      auto dj = digits(j, dims);
      for (int s : sel) std::swap(di[s], dj[s]);
      out(compose(di, dims), compose(dj, dims)) = a(i, j);
    }
  return out;
}

// Permutation unitary: factor k of the input moves to position sigma[k].
inline Mat permutation(const std::vector<int>& dims, const std::vector<int>& sigma) {
  const long n = total(dims);
  Mat p = Mat::Zero(n, n);
  std::vector<int> new_dims(dims.size());
  for (std::size_t k = 0; k < dims.size(); ++k) new_dims[sigma[k]] = dims[k];
  for (long i = 0; i < n; ++i) {
    const auto x = digits(i, dims);
    std::vector<int> y(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) y[sigma[k]] = x[k];
    p(compose(y, new_dims), i) = 1.0;
  }
  return p;
}

inline Mat random_matrix(long n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat m(n, n);
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

inline Mat random_hermitian(long n, std::mt19937_64& rng) {
  const Mat m = random_matrix(n, rng);
  return 0.5 * (m + m.adjoint());
}

inline Mat random_density(long n, std::mt19937_64& rng) {
  const Mat m = random_matrix(n, rng);
  Mat rho = m * m.adjoint();
  return rho / rho.trace();
}

inline Mat pauli(int k) {
  Mat p(2, 2);
  const cplx I(0, 1);
  switch (k) {
    case 0: p << 1, 0, 0, 1; break;
    case 1: p << 0, 1, 1, 0; break;
    case 2: p << 0, -I, I, 0; break;
    default: p << 1, 0, 0, -1; break;
  }
  return p;
}

// Choi operator sum_ij |i><j| (x) U|i><j|U^dagger built term by term.
inline Mat choi(const Mat& u) {
  const long d = u.rows();
  Mat j = Mat::Zero(d * d, d * d);
  for (long a = 0; a < d; ++a)
    for (long b = 0; b < d; ++b) {
      Mat eij = Mat::Zero(d, d);
      eij(a, b) = 1.0;
      j += kron(eij, u * eij * u.adjoint());
    }
  return j;
}

}  // namespace oracle
