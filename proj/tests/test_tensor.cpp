#include "doctest.h"

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "sod/channels.hpp"
#include "sod/combs.hpp"
#include "sod/tensor.hpp"

using namespace sod;

namespace {

LabeledOperator op(const std::vector<Space>& spaces, const Matrix& m) {
  return LabeledOperator(SpaceRegistry(spaces), m);
}

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("registry rejects duplicate labels and bad dims") {
  CHECK_THROWS_AS(SpaceRegistry({{"A", 2}, {"A", 3}}), LabelError);
  CHECK_THROWS_AS(SpaceRegistry({{"A", 0}}), DimensionError);
  SpaceRegistry r{{"A", 2}, {"B", 3}, {"C", 4}};
  CHECK(r.total_dim() == 24);
  CHECK(r.position("C") == 2);
  CHECK_THROWS_AS(r.position("D"), LabelError);
}

TEST_CASE("operator shape must match registry") {
  CHECK_THROWS_AS(op({{"A", 2}}, Matrix::Identity(3, 3)), DimensionError);
}

TEST_CASE("tensor_product") {
  auto a = LabeledOperator::identity(SpaceRegistry{{"A", 2}});
  auto b = LabeledOperator::identity(SpaceRegistry{{"B", 3}});
  auto ab = tensor_product(a, b);
  CHECK(ab.dim() == 6);
  CHECK(max_abs(ab.matrix() - Matrix::Identity(6, 6)) == 0.0);

  auto x = op({{"A", 2}}, oracle::pauli(1));
  auto z = op({{"B", 2}}, oracle::pauli(3));
  CHECK(max_abs(tensor_product(x, z).matrix() - oracle::kron(oracle::pauli(1), oracle::pauli(3))) == 0.0);

  CHECK_THROWS_AS(tensor_product(x, op({{"A", 2}}, oracle::pauli(3))), LabelError);

  std::mt19937_64 rng(11);
  for (int t = 0; t < 20; ++t) {
    auto h1 = op({{"A", 3}}, oracle::random_hermitian(3, rng));
    auto h2 = op({{"B", 4}}, oracle::random_hermitian(4, rng));
    const cplx lhs = tensor_product(h1, h2).trace();
    const cplx rhs = h1.trace() * h2.trace();
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("partial_trace matches brute-force oracle") {
  std::mt19937_64 rng(3);
  const std::vector<int> dims{2, 3, 2, 2};
  SpaceRegistry reg{{"A", 2}, {"B", 3}, {"C", 2}, {"D", 2}};
  const Matrix m = oracle::random_matrix(reg.total_dim(), rng);
  LabeledOperator a(reg, m);
  CHECK(max_abs(partial_trace(a, {"B", "D"}).matrix() - oracle::partial_trace(m, dims, {1, 3})) < 1e-12);
  CHECK(max_abs(partial_trace(a, {"D", "A"}).matrix() - oracle::partial_trace(m, dims, {0, 3})) < 1e-12);
  auto all = partial_trace(a, {"A", "B", "C", "D"});
  CHECK(all.dim() == 1);
  CHECK(std::abs(all.matrix()(0, 0) - m.trace()) < 1e-12);
  CHECK_THROWS_AS(partial_trace(a, {"Z"}), LabelError);
}

TEST_CASE("partial_trace product rule and J_id marginal") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    auto a = op({{"A", 4}}, oracle::random_hermitian(4, rng));
    auto b = op({{"B", 16}}, oracle::random_hermitian(16, rng));
    auto ab = tensor_product(a, b);
    auto left = partial_trace(ab, {"B"});
    CHECK(max_abs(left.matrix() - b.trace() * a.matrix()) <= 1e-12 * std::max(1.0, max_abs(left.matrix())));
    auto right = partial_trace(ab, {"A"});
    CHECK(max_abs(right.matrix() - a.trace() * b.matrix()) <= 1e-12 * std::max(1.0, max_abs(right.matrix())));
  }
  auto jid = op({{"in", 3}, {"out", 3}}, 3.0 * max_entangled_projector(3));
  CHECK(max_abs(partial_trace(jid, {"out"}).matrix() - Matrix::Identity(3, 3)) < 1e-14);
}

TEST_CASE("example deterministic comb satisfies the causal chain") {
  for (int K : {1, 2, 3}) {
    CombStructure s{K, 2, 2};
    auto rep = validate_deterministic_comb(example_deterministic_comb(s), 1e-12);
    CHECK(rep.valid);
    CHECK(rep.max_residual() <= 1e-12);
  }
}

TEST_CASE("partial_transpose") {
  std::mt19937_64 rng(8);
  Eigen::MatrixXd r = Eigen::MatrixXd::Random(6, 6);
  Matrix sym = (r + r.transpose()).cast<cplx>();
  auto s = op({{"A", 2}, {"B", 3}}, sym);
  CHECK(max_abs(partial_transpose(s, {"A", "B"}).matrix() - sym) == 0.0);

  const Matrix m = oracle::random_matrix(12, rng);
  auto a = op({{"A", 2}, {"B", 3}, {"C", 2}}, m);
  auto pt = partial_transpose(a, {"B"});
  CHECK(max_abs(pt.matrix() - oracle::partial_transpose(m, {2, 3, 2}, {1})) == 0.0);
  CHECK(max_abs(partial_transpose(pt, {"B"}).matrix() - m) <= 1e-14);

  for (int d : {2, 3}) {
    auto phi = op({{"A", d}, {"B", d}}, max_entangled_projector(d));
    const Matrix swap = oracle::permutation({d, d}, {1, 0});
    CHECK(max_abs(partial_transpose(phi, {"B"}).matrix() - swap / d) < 1e-14);
  }
}

TEST_CASE("reorder round trip and embed") {
  std::mt19937_64 rng(9);
  SpaceRegistry reg{{"A", 2}, {"B", 3}, {"C", 4}};
  LabeledOperator a(reg, oracle::random_matrix(24, rng));
  auto b = reorder(a, {"C", "A", "B"});
  CHECK(b.registry().labels() == std::vector<std::string>{"C", "A", "B"});
  auto c = reorder(b, {"A", "B", "C"});
  CHECK((c.matrix() - a.matrix()).cwiseAbs().maxCoeff() == 0.0);
  // reorder against the oracle permutation
  const Matrix p = oracle::permutation({2, 3, 4}, {1, 2, 0});
  CHECK(max_abs(b.matrix() - p * a.matrix() * p.adjoint()) < 1e-14);

  auto x = op({{"B", 2}}, oracle::pauli(1));
  auto e = embed(x, SpaceRegistry{{"A", 2}, {"B", 2}, {"C", 2}});
  Matrix expect = oracle::kron(oracle::kron(Matrix::Identity(2, 2), oracle::pauli(1)), Matrix::Identity(2, 2));
  CHECK(max_abs(e.matrix() - expect) == 0.0);
}

TEST_CASE("permutation operators") {
  SpaceRegistry two{{"A", 2}, {"B", 2}};
  std::vector<int> id{0, 1}, sw{1, 0};
  CHECK(max_abs(permutation_operator(two, id).matrix() - Matrix::Identity(4, 4)) == 0.0);
  // |01> -> |10>
  Vector v = Vector::Zero(4);
  v(1) = 1.0;
  Vector w = permutation_operator(two, sw).matrix() * v;
  CHECK(std::abs(w(2) - 1.0) == 0.0);

  SpaceRegistry three{{"A", 3}, {"B", 3}, {"C", 3}};
  CHECK_THROWS_AS(permutation_operator(SpaceRegistry{{"A", 2}, {"B", 3}}, sw), DimensionError);
  const auto perms = all_permutations(3);
  for (const auto& s : perms) {
    const Matrix p = permutation_operator(three, s).matrix();
    CHECK(max_abs(p - oracle::permutation({3, 3, 3}, s)) == 0.0);
    CHECK(max_abs(p.adjoint() * p - Matrix::Identity(27, 27)) < 1e-12);
    for (const auto& t : perms) {
      std::vector<int> st(3);
      for (int k = 0; k < 3; ++k) st[k] = s[t[k]];
      const Matrix pt = permutation_operator(three, t).matrix();
      CHECK(max_abs(p * pt - permutation_operator(three, st).matrix()) == 0.0);
    }
  }
  for (int d : {2, 3}) {
    auto a = antisymmetric_state(d);
    for (const auto& s : all_permutations(d)) {
      const Matrix p = permutation_operator(a.registry(), s).matrix();
      CHECK(max_abs(p * a.matrix() - permutation_sign(s) * a.matrix()) < 1e-12);
    }
  }
}

TEST_CASE("symmetric projector") {
  CHECK(max_abs(symmetric_projector(1, 2).matrix() - Matrix::Identity(4, 4)) == 0.0);
  for (int K : {2, 3}) {
    const Matrix pi = symmetric_projector(K, 2).matrix();
    CHECK(max_abs(pi * pi - pi) < 1e-12);
    CHECK(max_abs(pi - pi.adjoint()) == 0.0);
    // commutes with every simultaneous input/output permutation
    std::vector<int> dims(2 * K, 2);
    for (const auto& s : all_permutations(K)) {
      std::vector<int> sigma(2 * K);
      for (int k = 0; k < K; ++k) {
        sigma[2 * k] = 2 * s[k];
        sigma[2 * k + 1] = 2 * s[k] + 1;
      }
      const Matrix p = oracle::permutation(dims, sigma);
      CHECK(max_abs(p * pi - pi * p) < 1e-12);
    }
  }
  const Matrix pi = symmetric_projector(2, 2).matrix();
  for (int t = 0; t < 20; ++t) {
    const Matrix j = oracle::choi(haar_unitary(2, 100 + t));
    const Matrix jj = oracle::kron(j, j);
    CHECK(max_abs(pi * jj * pi - jj) < 1e-12);
  }
}

TEST_CASE("hermitian basis") {
  const auto b2 = hermitian_basis(2);
  REQUIRE(b2.g.size() == 4);
  for (int k = 0; k < 4; ++k) CHECK(max_abs(b2.g[k] - oracle::pauli(k)) < 1e-15);
  std::mt19937_64 rng(21);
  for (int d : {2, 3, 4}) {
    const auto b = hermitian_basis(d);
    REQUIRE(static_cast<int>(b.g.size()) == d * d);
    CHECK(max_abs(b.g[0] - Matrix::Identity(d, d)) == 0.0);
    for (std::size_t i = 0; i < b.g.size(); ++i) {
      CHECK(max_abs(b.g[i] - b.g[i].adjoint()) == 0.0);
      if (i > 0) CHECK(std::abs(b.g[i].trace()) < 1e-12);
      for (std::size_t j = 0; j < b.g.size(); ++j) {
        const cplx ip = (b.g[i] * b.g[j]).trace();
        CHECK(std::abs(ip - (i == j ? cplx(d) : cplx(0))) < 1e-12);
      }
    }
    const Matrix h = oracle::random_hermitian(d, rng);
    Matrix rec = Matrix::Zero(d, d);
    for (const auto& g : b.g) rec += ((g * h).trace() / static_cast<double>(d)) * g;
    CHECK(max_abs(rec - h) < 1e-12);
  }
}

TEST_CASE("antisymmetric state") {
  const auto a2 = antisymmetric_state(2);
  Vector singlet = Vector::Zero(4);
  singlet(1) = 1.0 / std::sqrt(2.0);
  singlet(2) = -1.0 / std::sqrt(2.0);
  CHECK(max_abs(a2.matrix() - singlet * singlet.adjoint()) < 1e-15);
  for (int d : {2, 3}) {
    const auto a = antisymmetric_state(d);
    CHECK(std::abs(a.trace() - 1.0) < 1e-12);
    std::vector<std::string> rest;
    for (int k = 2; k <= d; ++k) rest.push_back("A" + std::to_string(k));
    auto marg = partial_trace(a, std::span<const std::string>(rest));
    CHECK(max_abs(marg.matrix() - Matrix::Identity(d, d) / static_cast<double>(d)) < 1e-12);
  }
  const auto a3 = antisymmetric_state(3);
  for (const auto& s : all_permutations(3)) {
    const Matrix p = permutation_operator(a3.registry(), s).matrix();
    CHECK(max_abs(p * a3.matrix() * p.adjoint() - a3.matrix()) < 1e-12);
  }
}

TEST_CASE("min_eigenvalue") {
  CHECK(min_eigenvalue(Matrix(Matrix::Identity(3, 3))) == doctest::Approx(1.0));
  CHECK(min_eigenvalue(Matrix(oracle::pauli(3))) == doctest::Approx(-1.0));
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const Matrix m = oracle::random_matrix(8, rng);
    CHECK(min_eigenvalue(Matrix(m.adjoint() * m)) >= -1e-12);
  }
  CHECK_THROWS(min_eigenvalue(Matrix(oracle::random_matrix(3, rng))));
  CHECK(is_psd(op({{"A", 2}}, Matrix::Identity(2, 2)), 0.0));
}
