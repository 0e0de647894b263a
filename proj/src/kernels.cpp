#include "sod/kernels.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

namespace sod::kernels {

namespace {

std::vector<long> strides_of(std::span<const int> dims) {
  std::vector<long> s(dims.size(), 1);
  for (int k = static_cast<int>(dims.size()) - 2; k >= 0; --k) s[k] = s[k + 1] * dims[k + 1];
  return s;
}

// Offsets of all multi-indices over the chosen subsystems, enumerated
// row-major over those subsystems, expressed as flat indices of the full space.
std::vector<long> offsets_for(std::span<const int> dims, const std::vector<long>& strides,
                              const std::vector<int>& which) {
  long count = 1;
  for (int w : which) count *= dims[w];
  std::vector<long> out(count, 0);
  std::vector<int> digit(which.size(), 0);
  for (long n = 0; n < count; ++n) {
    long off = 0;
    for (std::size_t k = 0; k < which.size(); ++k) off += digit[k] * strides[which[k]];
    out[n] = off;
    for (int k = static_cast<int>(which.size()) - 1; k >= 0; --k) {
      if (++digit[k] < dims[which[k]]) break;
      digit[k] = 0;
    }
  }
  return out;
}

}  // namespace

SplitIndex split_index(std::span<const int> dims, std::span<const int> selected) {
  const auto strides = strides_of(dims);
  std::vector<bool> mark(dims.size(), false);
  for (int s : selected) mark[s] = true;
  std::vector<int> kept, rest;
  for (std::size_t k = 0; k < dims.size(); ++k) (mark[k] ? kept : rest).push_back(static_cast<int>(k));
  return {offsets_for(dims, strides, kept), offsets_for(dims, strides, rest)};
}

std::vector<long> permuted_index(std::span<const int> dims, std::span<const int> order) {
  const auto strides = strides_of(dims);
  return offsets_for(dims, strides, std::vector<int>(order.begin(), order.end()));
}

std::vector<std::vector<long>> slot_permutations(int K, int d, int lead, int trail) {
  std::vector<int> dims;
  if (lead > 1) dims.push_back(lead);
  const int offset = static_cast<int>(dims.size());
  for (int k = 0; k < 2 * K; ++k) dims.push_back(d);
  if (trail > 1) dims.push_back(trail);
  std::vector<std::vector<long>> out;
  for (const auto& sigma : all_permutations(K)) {
    std::vector<int> inverse(K);
    for (int k = 0; k < K; ++k) inverse[sigma[k]] = k;
    std::vector<int> order(dims.size());
    std::iota(order.begin(), order.end(), 0);
    for (int p = 0; p < K; ++p) {
      order[offset + 2 * p] = offset + 2 * inverse[p];
      order[offset + 2 * p + 1] = offset + 2 * inverse[p] + 1;
    }
    out.push_back(permuted_index(dims, order));
  }
  return out;
}

namespace {

// kept = complement of `traced`, rest = traced.
SplitIndex split_for_trace(std::span<const int> dims, std::span<const int> traced) {
  std::vector<bool> mark(dims.size(), false);
  for (int s : traced) mark[s] = true;
  std::vector<int> keep;
  for (std::size_t k = 0; k < dims.size(); ++k)
    if (!mark[k]) keep.push_back(static_cast<int>(k));
  return split_index(dims, keep);
}

// Hermitian eigen-clip of one block.
double clip_block(Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const auto& ev = es.eigenvalues();
  const double lo = ev.minCoeff();
  if (lo >= 0.0) return lo;
  Eigen::VectorXd clipped = ev.cwiseMax(0.0);
  m = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
  return lo;
}

}  // namespace

namespace serial {

Matrix partial_trace(const Matrix& a, std::span<const int> dims, std::span<const int> traced) {
  const auto split = split_for_trace(dims, traced);
  const long nk = static_cast<long>(split.kept.size());
  Matrix out = Matrix::Zero(nk, nk);
  for (long v = 0; v < nk; ++v)
    for (long u = 0; u < nk; ++u) {
      cplx acc = 0.0;
      for (long t : split.rest) acc += a(split.kept[u] + t, split.kept[v] + t);
      out(u, v) = acc;
    }
  return out;
}

Matrix permute_subsystems(const Matrix& a, std::span<const int> dims, std::span<const int> order) {
  const auto idx = permuted_index(dims, order);
  const long n = static_cast<long>(idx.size());
  Matrix out(n, n);
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i) out(i, j) = a(idx[i], idx[j]);
  return out;
}

Matrix partial_transpose(const Matrix& a, std::span<const int> dims, std::span<const int> selected) {
  const auto split = split_for_trace(dims, selected);
  const long nk = static_cast<long>(split.kept.size());
  const long ns = static_cast<long>(split.rest.size());
  Matrix out(a.rows(), a.cols());
  for (long kj = 0; kj < nk; ++kj)
    for (long sj = 0; sj < ns; ++sj)
      for (long ki = 0; ki < nk; ++ki)
        for (long si = 0; si < ns; ++si)
          out(split.kept[ki] + split.rest[si], split.kept[kj] + split.rest[sj]) =
              a(split.kept[ki] + split.rest[sj], split.kept[kj] + split.rest[si]);
  return out;
}

Matrix sandwich_average(const Matrix& a, const std::vector<std::vector<long>>& perms) {
  const long n = a.rows();
  const double w = 1.0 / static_cast<double>(perms.size());
  // Row permutation: (P A)(i, j) = A(p[i], j); column: (A P^dagger)(i, j) = A(i, p[j]).
  Matrix left = Matrix::Zero(n, n);
  for (const auto& p : perms)
    for (long j = 0; j < n; ++j)
      for (long i = 0; i < n; ++i) left(i, j) += w * a(p[i], j);
  Matrix out = Matrix::Zero(n, n);
  for (const auto& p : perms)
    for (long j = 0; j < n; ++j)
      for (long i = 0; i < n; ++i) out(i, j) += w * left(i, p[j]);
  return out;
}

Matrix conjugation_average(const Matrix& a, const std::vector<std::vector<long>>& perms) {
  const long n = a.rows();
  const double w = 1.0 / static_cast<double>(perms.size());
  Matrix out = Matrix::Zero(n, n);
  for (const auto& p : perms)
    for (long j = 0; j < n; ++j)
      for (long i = 0; i < n; ++i) out(i, j) += w * a(p[i], p[j]);
  return out;
}

Matrix contract_middle(const Matrix& c, const Matrix& x, long da, long db) {
  const long r = x.rows();
  const long outer = da * db;
  Matrix out = Matrix::Zero(outer, outer);
  for (long a2 = 0; a2 < da; ++a2)
    for (long b2 = 0; b2 < db; ++b2)
      for (long a1 = 0; a1 < da; ++a1)
        for (long b1 = 0; b1 < db; ++b1) {
          cplx acc = 0.0;
          for (long r2 = 0; r2 < r; ++r2)
            for (long r1 = 0; r1 < r; ++r1)
              acc += c((a1 * r + r1) * db + b1, (a2 * r + r2) * db + b2) * x(r1, r2);
          out(a1 * db + b1, a2 * db + b2) = acc;
        }
  return out;
}

double project_psd(std::span<Matrix> blocks) {
  double lo = std::numeric_limits<double>::infinity();
  for (auto& b : blocks) lo = std::min(lo, clip_block(b));
  return lo;
}

}  // namespace serial

namespace parallel {

Matrix partial_trace(const Matrix& a, std::span<const int> dims, std::span<const int> traced) {
  const auto split = split_for_trace(dims, traced);
  const long nk = static_cast<long>(split.kept.size());
  Matrix out = Matrix::Zero(nk, nk);
#pragma omp parallel for schedule(static)
  for (long v = 0; v < nk; ++v)
    for (long u = 0; u < nk; ++u) {
      cplx acc = 0.0;
      for (long t : split.rest) acc += a(split.kept[u] + t, split.kept[v] + t);
      out(u, v) = acc;
    }
  return out;
}

Matrix permute_subsystems(const Matrix& a, std::span<const int> dims, std::span<const int> order) {
  const auto idx = permuted_index(dims, order);
  const long n = static_cast<long>(idx.size());
  Matrix out(n, n);
#pragma omp parallel for schedule(static)
  for (long j = 0; j < n; ++j)
    for (long i = 0; i < n; ++i) out(i, j) = a(idx[i], idx[j]);
  return out;
}

Matrix partial_transpose(const Matrix& a, std::span<const int> dims, std::span<const int> selected) {
  const auto split = split_for_trace(dims, selected);
  const long nk = static_cast<long>(split.kept.size());
  const long ns = static_cast<long>(split.rest.size());
  Matrix out(a.rows(), a.cols());
#pragma omp parallel for collapse(2) schedule(static)
  for (long kj = 0; kj < nk; ++kj)
    for (long sj = 0; sj < ns; ++sj)
      for (long ki = 0; ki < nk; ++ki)
        for (long si = 0; si < ns; ++si)
          out(split.kept[ki] + split.rest[si], split.kept[kj] + split.rest[sj]) =
              a(split.kept[ki] + split.rest[sj], split.kept[kj] + split.rest[si]);
  return out;
}

Matrix sandwich_average(const Matrix& a, const std::vector<std::vector<long>>& perms) {
  const long n = a.rows();
  const double w = 1.0 / static_cast<double>(perms.size());
  Matrix left = Matrix::Zero(n, n);
#pragma omp parallel for schedule(static)
  for (long j = 0; j < n; ++j)
    for (const auto& p : perms)
      for (long i = 0; i < n; ++i) left(i, j) += w * a(p[i], j);
  Matrix out = Matrix::Zero(n, n);
#pragma omp parallel for schedule(static)
  for (long j = 0; j < n; ++j)
    for (const auto& p : perms)
      for (long i = 0; i < n; ++i) out(i, j) += w * left(i, p[j]);
  return out;
}

Matrix conjugation_average(const Matrix& a, const std::vector<std::vector<long>>& perms) {
  const long n = a.rows();
  const double w = 1.0 / static_cast<double>(perms.size());
  Matrix out = Matrix::Zero(n, n);
#pragma omp parallel for schedule(static)
  for (long j = 0; j < n; ++j)
    for (const auto& p : perms)
      for (long i = 0; i < n; ++i) out(i, j) += w * a(p[i], p[j]);
  return out;
}

Matrix contract_middle(const Matrix& c, const Matrix& x, long da, long db) {
  const long r = x.rows();
  const long outer = da * db;
  Matrix out = Matrix::Zero(outer, outer);
#pragma omp parallel for collapse(2) schedule(static)
  for (long a2 = 0; a2 < da; ++a2)
    for (long b2 = 0; b2 < db; ++b2)
      for (long a1 = 0; a1 < da; ++a1)
        for (long b1 = 0; b1 < db; ++b1) {
          cplx acc = 0.0;
          for (long r2 = 0; r2 < r; ++r2)
            for (long r1 = 0; r1 < r; ++r1)
              acc += c((a1 * r + r1) * db + b1, (a2 * r + r2) * db + b2) * x(r1, r2);
          out(a1 * db + b1, a2 * db + b2) = acc;
        }
  return out;
}

double project_psd(std::span<Matrix> blocks) {
  const long n = static_cast<long>(blocks.size());
  std::vector<double> lows(n);
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < n; ++k) lows[k] = clip_block(blocks[k]);
  return n == 0 ? std::numeric_limits<double>::infinity() : *std::min_element(lows.begin(), lows.end());
}

std::vector<Matrix> contract_middle_batch(const Matrix& c, std::span<const Matrix> xs, long da,
                                          long db) {
  std::vector<Matrix> out(xs.size());
  const long n = static_cast<long>(xs.size());
#pragma omp parallel for schedule(dynamic)
  for (long k = 0; k < n; ++k) out[k] = serial::contract_middle(c, xs[k], da, db);
  return out;
}

}  // namespace parallel

}  // namespace sod::kernels
