#include "doctest.h"

#include <cmath>

#include <boost/math/special_functions/gamma.hpp>

#include "oracle.hpp"
#include "sod/protocols.hpp"

using namespace sod;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

Vector random_state(std::uint64_t seed) { return haar_unitary(2, seed).col(0); }

}  // namespace

TEST_CASE("teleportation one-slot comb") {
  const auto s = teleportation_sstgs();
  CHECK(s.target == TargetKind::inverse);
  CHECK(min_eigenvalue(s.choi) >= -1e-14);

  std::vector<Matrix> us;
  for (int k = 0; k < 100; ++k) us.push_back(haar_unitary(2, derive_seed(61, k)));
  const auto act = check_success_action(s.as_comb(), target_function(TargetKind::inverse), us, 1e-10);
  CHECK(act.ok);
  CHECK(act.spread <= 1e-10);
  for (double p : act.p) CHECK(p == doctest::Approx(0.25).epsilon(1e-10));

  // matching oracle: the unnormalized J_Y (x) J_Y maps U to c J_{U^dagger};
  // 1/c is the constant frozen into the comb
  const Matrix jy = oracle::choi(oracle::pauli(2));
  // (I0, O1, I1, O0) -> (I0, I1, O1, O0)
  const Matrix raw = oracle::permutation({2, 2, 2, 2}, {0, 2, 1, 3}) * oracle::kron(jy, jy) *
                     oracle::permutation({2, 2, 2, 2}, {0, 2, 1, 3}).adjoint();
  const Comb raw_comb(CombStructure{1, 2, 2}, LabeledOperator(s.choi.registry(), raw));
  for (int k = 0; k < 5; ++k) {
    const Matrix out = apply_comb_unitary(raw_comb, us[k]).choi().matrix();
    const Matrix target = oracle::choi(us[k].adjoint());
    const cplx c = (target.adjoint() * out).trace() / (target.adjoint() * target).trace();
    CHECK(std::abs(c - 1.0) < 1e-10);
    CHECK(max_abs(out - c * target) < 1e-10);
  }
  CHECK(max_abs(apply_comb_unitary(s.as_comb(), Matrix::Identity(2, 2)).choi().matrix() -
                0.25 * oracle::choi(Matrix::Identity(2, 2))) < 1e-12);

  const Comb comp(CombStructure{1, 2, 2}, teleportation_complement());
  CHECK(validate_probabilistic_pair(s.as_comb(), comp, 1e-12).valid);
}

TEST_CASE("transpose and identity one-slot combs") {
  for (int d : {2, 3}) {
    const auto s = transpose_sstgs(d);
    std::vector<Matrix> us;
    for (int k = 0; k < 10; ++k) us.push_back(haar_unitary(d, derive_seed(62, k)));
    const auto act = check_success_action(s.as_comb(), target_function(TargetKind::transpose), us, 1e-10);
    CHECK(act.ok);
    for (double p : act.p) CHECK(p == doctest::Approx(1.0 / (d * d)).epsilon(1e-10));
    const Comb comp(CombStructure{1, d, d}, transpose_complement(d));
    CHECK(validate_probabilistic_pair(s.as_comb(), comp, 1e-12).valid);
    CHECK(validate_deterministic_comb(identity_sstgs(d).as_comb(), 1e-12).valid);
  }
}

TEST_CASE("teleport_inversion_round") {
  int seen[4] = {0, 0, 0, 0};
  for (int t = 0; t < 1000; ++t) {
    const Matrix u = haar_unitary(2, derive_seed(7, 2 * t));
    const Vector psi = random_state(derive_seed(7, 2 * t + 1));
    const auto r = teleport_inversion_round(u, psi, derive_seed(8, t));
    ++seen[r.frame.i * 2 + r.frame.j];
    CHECK(r.probability == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(r.fidelity <= 1.0 + 1e-12);
    if (r.success) {
      CHECK(r.calls == 1);
      const double f = std::norm((u.adjoint() * psi).dot(r.state));
      CHECK(f == doctest::Approx(1.0).epsilon(1e-12));
    } else {
      CHECK(r.calls == 2);
      CHECK(std::abs(r.fidelity - 1.0) <= 1e-12);
      CHECK(std::abs(std::norm(psi.dot(r.state)) - 1.0) <= 1e-12);
    }
  }
  for (int o = 0; o < 4; ++o) CHECK(seen[o] > 0);
  CHECK_THROWS_AS(teleport_inversion_round(Matrix::Identity(3, 3), random_state(1), 1), DimensionError);
}

TEST_CASE("success frequency over 1e5 rounds") {
  const int n = 100000;
  long successes = 0;
  for (int t = 0; t < n; ++t) {
    const Matrix u = haar_unitary(2, derive_seed(21, 2 * t));
    const Vector psi = random_state(derive_seed(21, 2 * t + 1));
    successes += teleport_inversion_round(u, psi, derive_seed(22, t)).success;
  }
  CHECK(std::abs(static_cast<double>(successes) / n - 0.25) <= 0.004);
}

TEST_CASE("success probability is independent of U and psi") {
  // chi-square over 10 fixed (U, psi) pairs against the known rate 1/4
  const int per = 4000;
  double chi2 = 0.0;
  for (int k = 0; k < 10; ++k) {
    const Matrix u = haar_unitary(2, derive_seed(31, k));
    const Vector psi = random_state(derive_seed(32, k));
    long s = 0;
    for (int t = 0; t < per; ++t) s += teleport_inversion_round(u, psi, derive_seed(33 + k, t)).success;
    const double e_s = 0.25 * per, e_f = 0.75 * per;
    chi2 += (s - e_s) * (s - e_s) / e_s + ((per - s) - e_f) * ((per - s) - e_f) / e_f;
  }
  const double p_value = boost::math::gamma_q(10 / 2.0, chi2 / 2.0);
  CHECK(p_value > 0.01);
}

TEST_CASE("repeat_until_success") {
  const auto always = repeat_until_success(bernoulli_round(1.0), 1.0, 5, 1000, 1);
  CHECK(always.successes == 1000);
  CHECK(always.mean_rounds == 1.0);
  CHECK(always.success_by_round[0] == 1.0);

  const int n = 100000;
  const auto third = repeat_until_success(bernoulli_round(1.0 / 3.0), 1.0 / 3.0, 10, n, 2);
  const double tail = std::pow(2.0 / 3.0, 10);
  CHECK(tail == doctest::Approx(0.01734).epsilon(1e-3));
  CHECK(std::abs(third.failure_fraction - tail) <= 3.0 * std::sqrt(tail * (1 - tail) / n));
  CHECK(third.nominal_by_round.back() == doctest::Approx(1.0 - tail));

  const auto quarter = repeat_until_success(bernoulli_round(0.25), 0.25, 400, n, 3);
  const double sd = std::sqrt(0.75) / 0.25 / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(quarter.mean_rounds - 4.0) <= 3.0 * sd);

  // same seed, same numbers
  const auto again = repeat_until_success(bernoulli_round(0.25), 0.25, 400, n, 3);
  CHECK(again.mean_rounds == quarter.mean_rounds);
  CHECK(again.success_by_round == quarter.success_by_round);
  CHECK_THROWS(repeat_until_success(bernoulli_round(0.5), 0.5, 0, 10, 1));
}

TEST_CASE("teleport repeat-until-success bookkeeping") {
  const auto stats = simulate_teleport_inversion(20000, 10, 5, true);
  REQUIRE(stats.records.size() == 20000u);
  long calls = 0;
  for (const auto& r : stats.records) {
    // draws cost two calls, the final success one
    const int expected = r.success ? 2 * (r.rounds - 1) + 1 : 2 * r.rounds;
    CHECK(r.calls == expected);
    CHECK(static_cast<int>(r.frames.size()) == r.rounds);
    if (r.success) CHECK(r.frames.back().success());
    CHECK(r.fidelity == doctest::Approx(1.0).epsilon(1e-12));
    calls += r.calls;
  }
  CHECK(stats.mean_calls == doctest::Approx(static_cast<double>(calls) / 20000).epsilon(1e-15));
  const double tail = std::pow(0.75, 10);
  CHECK(std::abs(stats.failure_fraction - tail) <= 4.0 * std::sqrt(tail * (1 - tail) / 20000));
}
