#include "doctest.h"

#include <random>

#include "oracle.hpp"
#include "sod/channels.hpp"

using namespace sod;

namespace {
double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }
}  // namespace

TEST_CASE("choi_of_unitary") {
  for (int d : {2, 3}) {
    const auto jid = choi_of_unitary(Matrix::Identity(d, d));
    CHECK(max_abs(jid.choi().matrix() - d * max_entangled_projector(d)) < 1e-15);
  }
  const auto jx = choi_of_unitary(oracle::pauli(1)).choi().matrix();
  CHECK(max_abs(jx - oracle::choi(oracle::pauli(1))) == 0.0);
  CHECK(std::abs(jx.trace() - 2.0) < 1e-15);
  // |0>|1> + |1>|0> outer product
  CHECK(jx(1, 2) == cplx(1.0));
  CHECK(jx(0, 0) == cplx(0.0));

  for (int t = 0; t < 20; ++t) {
    const Matrix u = haar_unitary(3, 40 + t);
    const Matrix j = choi_of_unitary(u).choi().matrix();
    CHECK(max_abs(j - oracle::choi(u)) < 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(j);
    CHECK(es.eigenvalues()(7) < 1e-10);
    CHECK(std::abs(es.eigenvalues()(8) - 3.0) < 1e-10);
    CHECK(std::abs(j.trace() - 3.0) < 1e-10);
  }
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 1) = 0.5;
  CHECK_THROWS(choi_of_unitary(bad));
}

TEST_CASE("validate_channel") {
  for (int t = 0; t < 50; ++t) {
    auto r = validate_channel(choi_of_unitary(haar_unitary(2, 300 + t)), 1e-10);
    CHECK((r.cp && r.tp && r.unital));
  }
  Channel dep(LabeledOperator(SpaceRegistry{{"in", 3}, {"out", 3}}, Matrix::Identity(9, 9) / 3.0));
  auto rd = validate_channel(dep, 1e-12);
  CHECK((rd.cp && rd.tp && rd.unital));
  Channel half(LabeledOperator(SpaceRegistry{{"in", 2}, {"out", 2}}, 0.5 * 2.0 * max_entangled_projector(2)));
  auto rh = validate_channel(half, 1e-9);
  CHECK(rh.cp);
  CHECK_FALSE(rh.tp);
}

TEST_CASE("apply_channel") {
  std::mt19937_64 rng(2);
  const auto jid = choi_of_unitary(Matrix::Identity(3, 3));
  const Matrix rho = oracle::random_density(3, rng);
  CHECK(max_abs(apply_channel(jid, rho) - rho) < 1e-14);
  for (int t = 0; t < 20; ++t) {
    const Matrix u = haar_unitary(2, 500 + t);
    const Matrix r = oracle::random_density(2, rng);
    CHECK(max_abs(apply_channel(choi_of_unitary(u), r) - u * r * u.adjoint()) < 1e-12);
    CHECK(std::abs(apply_channel(choi_of_unitary(u), r).trace() - 1.0) < 1e-10);
  }
  Channel dep(LabeledOperator(SpaceRegistry{{"in", 2}, {"out", 2}}, Matrix::Identity(4, 4) / 2.0));
  Vector psi = Vector::Zero(2);
  psi(1) = 1.0;
  CHECK(max_abs(apply_channel(dep, psi * psi.adjoint()) - Matrix::Identity(2, 2) / 2.0) < 1e-15);
  CHECK_THROWS_AS(apply_channel(dep, Matrix::Identity(3, 3)), DimensionError);
}

TEST_CASE("haar_unitary") {
  const Matrix u = haar_unitary(4, 9);
  CHECK(max_abs(u.adjoint() * u - Matrix::Identity(4, 4)) < 1e-12);
  CHECK((haar_unitary(4, 9).array() == u.array()).all());
  CHECK_FALSE((haar_unitary(4, 10).array() == u.array()).all());

  Vector psi = Vector::Zero(3);
  psi(0) = 1.0;
  const Matrix rho = psi * psi.adjoint();
  Matrix mean = Matrix::Zero(3, 3);
  const int n = 5000;
  for (int t = 0; t < n; ++t) {
    const Matrix v = haar_unitary(3, derive_seed(77, t));
    mean += v * rho * v.adjoint();
  }
  mean /= n;
  CHECK((mean - Matrix::Identity(3, 3) / 3.0).norm() <= 0.05);
}

TEST_CASE("span_dimension") {
  const auto r21 = span_dimension(2, 1, 1);
  CHECK(r21.dim == 10);
  CHECK(r21.converged);
  CHECK(r21.spanning_unitaries.size() == 10u);
  CHECK(span_dimension(3, 1, 1).dim == 65);
  int first = -1;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const auto r = span_dimension(2, 2, seed);
    CHECK(r.converged);
    if (first < 0) first = r.dim;
    CHECK(r.dim == first);
  }
  // recorded value: span{J_U (x) J_U} for qubits
  CHECK(first == 35);
}

TEST_CASE("twirl_Q") {
  const auto t = twirl_Q(2, 2000, 5);
  const Matrix& q = t.exact.matrix();
  CHECK(max_abs(q - q.adjoint()) < 1e-14);
  Eigen::SelfAdjointEigenSolver<Matrix> es(q);
  int rank = 0;
  for (long k = 0; k < es.eigenvalues().size(); ++k) {
    const double ev = es.eigenvalues()(k);
    const bool allowed = std::abs(ev) < 1e-10 || std::abs(ev - 1.0 / 3.0) < 1e-10 || std::abs(ev - 1.0) < 1e-10;
    CHECK(allowed);
    if (ev > 1e-10) ++rank;
  }
  CHECK(rank == 10);
  CHECK(t.deviation <= 0.05);

  // Independent form: twirl commutes with V* (x) I (x) V (x) I
  for (int s = 0; s < 10; ++s) {
    const Matrix v = haar_unitary(2, 900 + s);
    const Matrix w = oracle::kron(oracle::kron(oracle::kron(v.conjugate(), Matrix::Identity(2, 2)), v),
                                  Matrix::Identity(2, 2));
    CHECK(max_abs(w * q * w.adjoint() - q) < 1e-10);
  }
  // exact Q is the Haar average of unnormalized |U*>>|U>> pairs
  Matrix acc = Matrix::Zero(16, 16);
  const int n = 4000;
  for (int s = 0; s < n; ++s) {
    const Matrix u = haar_unitary(2, derive_seed(1234, s));
    const Vector ab = oracle::kron(vec_unitary(u.conjugate()), vec_unitary(u));
    acc += ab * ab.adjoint();
  }
  CHECK((acc / n - q).norm() < 0.25);
}
