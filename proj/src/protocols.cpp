#include "sod/protocols.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "sod/channels.hpp"

namespace sod {

namespace {

Matrix pauli_y() {
  Matrix y(2, 2);
  y << 0.0, cplx(0.0, -1.0), cplx(0.0, 1.0), 0.0;
  return y;
}

LabeledOperator choi_on(const Matrix& u, const std::string& in, const std::string& out) {
  return choi_of_unitary(u, in, out).choi();
}

LabeledOperator comb_order(const LabeledOperator& a) { return reorder(a, {"I0", "I1", "O1", "O0"}); }

double fidelity(const Vector& a, const Vector& b) { return std::norm(a.dot(b)) / (a.squaredNorm() * b.squaredNorm()); }

}  // namespace

OneSlotComb teleportation_sstgs() {
  const Matrix y = pauli_y();
  OneSlotComb s;
  s.choi = comb_order(cplx(0.25) * tensor_product(choi_on(y, "I0", "O1"), choi_on(y, "I1", "O0")));
  s.target = TargetKind::inverse;
  s.p_nominal = 0.25;
  return s;
}

LabeledOperator teleportation_complement() {
  const LabeledOperator id(SpaceRegistry{{"I0", 2}, {"O1", 2}}, Matrix::Identity(4, 4));
  const LabeledOperator det = comb_order(cplx(0.5) * tensor_product(id, choi_on(pauli_y(), "I1", "O0")));
  return det - teleportation_sstgs().choi;
}

OneSlotComb transpose_sstgs(int d) {
  const Matrix id = Matrix::Identity(d, d);
  OneSlotComb s;
  s.choi = comb_order(cplx(1.0 / (d * d)) * tensor_product(choi_on(id, "I0", "O1"), choi_on(id, "I1", "O0")));
  s.target = TargetKind::transpose;
  s.p_nominal = 1.0 / (d * d);
  return s;
}

LabeledOperator transpose_complement(int d) {
  const LabeledOperator id(SpaceRegistry{{"I0", d}, {"O1", d}}, Matrix::Identity(d * d, d * d));
  const LabeledOperator det =
      comb_order(cplx(1.0 / d) * tensor_product(id, choi_on(Matrix::Identity(d, d), "I1", "O0")));
  return det - transpose_sstgs(d).choi;
}

OneSlotComb identity_sstgs(int d) {
  const Matrix id = Matrix::Identity(d, d);
  OneSlotComb s;
  s.choi = comb_order(tensor_product(choi_on(id, "I0", "I1"), choi_on(id, "O1", "O0")));
  s.target = TargetKind::identity;
  s.p_nominal = 1.0;
  return s;
}

Matrix PauliFrame::op() const {
  Matrix x(2, 2), z(2, 2);
  x << 0.0, 1.0, 1.0, 0.0;
  z << 1.0, 0.0, 0.0, -1.0;
  Matrix out = Matrix::Identity(2, 2);
  if (i) out = out * x;
  if (j) out = out * z;
  return out;
}

// Qubits a (input), b, c (resource pair), a slowest. U acts on b, the Bell
// measurement on (a, b) projects onto (I (x) P)|phi+>, and c then carries
// U^T P^* Y^dagger psi up to normalization; Y on c turns that into U^dagger P psi
// up to a phase, since Y P^* Y^dagger = +-P for real Paulis.
RoundResult teleport_inversion_round(const Matrix& u, const Vector& psi, std::uint64_t seed) {
  if (u.rows() != 2 || u.cols() != 2 || psi.size() != 2)
    throw DimensionError("teleport_inversion_round: qubit U and psi required");
  const Matrix y = pauli_y();
  const Matrix id = Matrix::Identity(2, 2);
  const Vector in = psi.normalized();

  Vector phi = Vector::Zero(4);
  phi(0) = phi(3) = 1.0 / std::sqrt(2.0);
  Vector state = kron(y.adjoint() * in, phi);
  state = kron(kron(id, u), id) * state;

  // Conditional states on c and their Born weights.
  std::vector<Vector> cond(4);
  std::vector<double> prob(4);
  for (int o = 0; o < 4; ++o) {
    const PauliFrame f{o / 2, o % 2};
    const Vector bell = kron(id, f.op()) * phi;
    Vector c = Vector::Zero(2);
    for (int ab = 0; ab < 4; ++ab)
      for (int k = 0; k < 2; ++k) c(k) += std::conj(bell(ab)) * state(ab * 2 + k);
    cond[o] = c;
    prob[o] = c.squaredNorm();
  }

  std::mt19937_64 rng(seed);
  const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  int o = 0;
  double acc = prob[0];
  while (o < 3 && r >= acc) acc += prob[++o];

  RoundResult res;
  res.frame = PauliFrame{o / 2, o % 2};
  res.probability = prob[o];
  Vector out = y * cond[o];
  out.normalize();
  if (res.frame.success()) {
    res.success = true;
    res.calls = 1;
    res.state = out;
    res.fidelity = fidelity(u.adjoint() * in, out);
  } else {
    // second call of U undoes U^dagger, then the Pauli frame is removed
    const Matrix p = res.frame.op();
    out = p.adjoint() * (u * out);
    res.calls = 2;
    res.state = out;
    res.fidelity = fidelity(in, out);
  }
  return res;
}

RoundFn bernoulli_round(double p) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("bernoulli_round: p must lie in [0, 1]");
  return [p](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    RoundOutcome o;
    o.success = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
    return o;
  };
}

RoundFn teleport_round_fn(const Matrix& u, const Vector& psi) {
  return [u, psi](std::uint64_t seed) {
    const RoundResult r = teleport_inversion_round(u, psi, seed);
    return RoundOutcome{r.success, r.calls, r.fidelity, r.frame};
  };
}

namespace {

TrialRecord run_trial(const RoundFn& round_fn, int max_rounds, std::uint64_t trial_seed) {
  TrialRecord t;
  for (int r = 0; r < max_rounds; ++r) {
    const RoundOutcome o = round_fn(derive_seed(trial_seed, static_cast<std::uint64_t>(r)));
    ++t.rounds;
    t.calls += o.calls;
    t.fidelity = o.fidelity;
    t.frames.push_back(o.frame);
    if (o.success) {
      t.success = true;
      break;
    }
  }
  return t;
}

RusStatistics aggregate(std::vector<TrialRecord> records, double p_nominal, int max_rounds, bool keep) {
  RusStatistics s;
  s.trials = static_cast<int>(records.size());
  s.max_rounds = max_rounds;
  s.p_nominal = p_nominal;
  std::vector<long> finished(max_rounds, 0);
  long rounds = 0, calls = 0, rounds_success = 0;
  for (const auto& t : records) {
    rounds += t.rounds;
    calls += t.calls;
    if (t.success) {
      ++s.successes;
      rounds_success += t.rounds;
      ++finished[t.rounds - 1];
    }
  }
  long cum = 0;
  for (int r = 0; r < max_rounds; ++r) {
    cum += finished[r];
    s.success_by_round.push_back(static_cast<double>(cum) / s.trials);
    s.nominal_by_round.push_back(1.0 - std::pow(1.0 - p_nominal, r + 1));
  }
  s.failure_fraction = 1.0 - static_cast<double>(s.successes) / s.trials;
  s.mean_rounds = static_cast<double>(rounds) / s.trials;
  s.mean_calls = static_cast<double>(calls) / s.trials;
  s.mean_rounds_success = s.successes ? static_cast<double>(rounds_success) / s.successes : 0.0;
  if (keep) s.records = std::move(records);
  return s;
}

}  // namespace

RusStatistics repeat_until_success(const RoundFn& round_fn, double p_nominal, int max_rounds, int trials,
                                   std::uint64_t seed, bool keep_records) {
  if (max_rounds < 1) throw std::invalid_argument("repeat_until_success: max_rounds must be at least 1");
  if (trials < 1) throw std::invalid_argument("repeat_until_success: trials must be at least 1");
  std::vector<TrialRecord> records(trials);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < trials; ++t) records[t] = run_trial(round_fn, max_rounds, derive_seed(seed, t));
  return aggregate(std::move(records), p_nominal, max_rounds, keep_records);
}

RusStatistics simulate_teleport_inversion(int trials, int max_rounds, std::uint64_t seed, bool keep_records) {
  if (max_rounds < 1) throw std::invalid_argument("simulate_teleport_inversion: max_rounds must be at least 1");
  if (trials < 1) throw std::invalid_argument("simulate_teleport_inversion: trials must be at least 1");
  std::vector<TrialRecord> records(trials);
#pragma omp parallel for schedule(static)
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t ts = derive_seed(seed, t);
    // counters 0 and 1 seed the instance, rounds start at 2
    const Matrix u = haar_unitary(2, derive_seed(ts, 0));
    const Vector psi = haar_unitary(2, derive_seed(ts, 1)).col(0);
    const RoundFn fn = teleport_round_fn(u, psi);
    records[t] = run_trial([&](std::uint64_t s) { return fn(s); }, max_rounds, derive_seed(ts, 2));
  }
  return aggregate(std::move(records), 0.25, max_rounds, keep_records);
}

}  // namespace sod
