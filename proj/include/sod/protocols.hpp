#pragma once

// Teleportation-based inversion on qubits, repeat-until-success statistics and
// the one-slot combs used as construction inputs.

#include <cstdint>
#include <functional>
#include <vector>

#include "sod/construction.hpp"

namespace sod {

// (1/4) J_Y^{I0 O1} (x) J_Y^{I1 O0}: U -> (1/4) J_{U^dagger} on qubits.
OneSlotComb teleportation_sstgs();
// (1/2) I^{I0 O1} (x) J_Y^{I1 O0} - S; the sum is a deterministic comb.
LabeledOperator teleportation_complement();

// (1/d^2) J_id^{I0 O1} (x) J_id^{I1 O0}: U -> (1/d^2) J_{U^T}.
OneSlotComb transpose_sstgs(int d);
LabeledOperator transpose_complement(int d);

// Deterministic wiring I0 -> I1, O1 -> O0: U -> J_U.
OneSlotComb identity_sstgs(int d);

// Bell outcome indexing sigma_x^i sigma_z^j; (0, 0) is success.
struct PauliFrame {
  int i = 0;
  int j = 0;
  bool success() const { return i == 0 && j == 0; }
  Matrix op() const;
};

struct RoundResult {
  bool success = false;
  PauliFrame frame;
  Vector state;
  int calls = 0;
  // Fidelity to U^dagger psi on success, to psi on a draw.
  double fidelity = 0.0;
  // Born probability of the sampled outcome.
  double probability = 0.0;
};

// One success-or-resetting round on a qubit state. Draws cost a second call of U.
RoundResult teleport_inversion_round(const Matrix& u, const Vector& psi, std::uint64_t seed);

struct RoundOutcome {
  bool success = false;
  int calls = 1;
  double fidelity = 1.0;
  PauliFrame frame;
};

using RoundFn = std::function<RoundOutcome(std::uint64_t seed)>;

// Round that succeeds with probability p and costs one call.
RoundFn bernoulli_round(double p);
// teleport_inversion_round on a fixed (U, psi); on a draw the next round reuses psi.
RoundFn teleport_round_fn(const Matrix& u, const Vector& psi);

struct TrialRecord {
  int rounds = 0;
  int calls = 0;
  bool success = false;
  double fidelity = 0.0;
  std::vector<PauliFrame> frames;
};

struct RusStatistics {
  int trials = 0;
  int max_rounds = 0;
  double p_nominal = 0.0;
  int successes = 0;
  double failure_fraction = 0.0;
  // success_by_round[r] = fraction of trials finished within r + 1 rounds.
  std::vector<double> success_by_round;
  // 1 - (1 - p)^(r + 1).
  std::vector<double> nominal_by_round;
  double mean_rounds = 0.0;
  double mean_calls = 0.0;
  // Mean rounds over successful trials only.
  double mean_rounds_success = 0.0;
  std::vector<TrialRecord> records;
};

// Trials run in parallel; trial t draws its rounds from derive_seed(derive_seed(seed, t), r).
RusStatistics repeat_until_success(const RoundFn& round_fn, double p_nominal, int max_rounds, int trials,
                                   std::uint64_t seed, bool keep_records = false);

// Haar-random U and psi per trial.
RusStatistics simulate_teleport_inversion(int trials, int max_rounds, std::uint64_t seed,
                                          bool keep_records = false);

}  // namespace sod
