#pragma once

// Success-or-draw unitary inversion as an SDP over (S, N, p).

#include <cstdint>
#include <string>
#include <vector>

#include "sod/combs.hpp"
#include "sod/sdp.hpp"

namespace sod {

// symmetric: Tr_IO(N Pi) proportional to J_id.
// spanning: Tr_IO[N (J_U^{(x)K})^T] proportional to J_id for every spanning U.
enum class NeutralMode { symmetric, spanning };
std::string to_string(NeutralMode m);
NeutralMode neutral_mode_from_string(const std::string& s);

struct InversionProblem {
  SdpProblem problem;
  CombStructure structure;
  NeutralMode mode = NeutralMode::symmetric;
  std::vector<Matrix> spanning;
  int block_s = 0;
  int block_n = 1;
};

// Supports d = 2 and K in {1, 2}. Spanning unitaries come from span_dimension(d, K, seed).
// With reduce_symmetry the blocks carry the SU(2) conjugation symmetry, which
// leaves the ADMM iterates unchanged and makes each iteration far cheaper.
InversionProblem build_inversion_problem(int d, int K, NeutralMode mode, std::uint64_t seed = 1,
                                         bool reduce_symmetry = true);

struct InversionSolution {
  SdpSolution sdp;
  Comb s;
  Comb n;
  double p = 0.0;
  // Certified upper bound on the optimal p from the dual iterate.
  double p_upper = 0.0;
};

// Tolerance 1e-9 rather than the generic 1e-6: the optimum sits on a face
// without interior points, and the p error scales like the square root of the
// residual, so the looser stop leaves p off by about 1e-3.
SdpOptions inversion_solver_options();

// The trace bound d0 d^K is filled in when opt.trace_bound is unset.
InversionSolution solve_inversion(const InversionProblem& prob, const SdpOptions& opt = inversion_solver_options());

struct InversionComparison {
  InversionSolution symmetric;
  InversionSolution spanning;
  double p = 0.0;
  double gap = 0.0;
};

// Runs both neutral modes; p is the symmetric-mode value.
InversionComparison optimal_inversion_probability(int d, int K, const SdpOptions& opt = inversion_solver_options(),
                                                  std::uint64_t seed = 1);

}  // namespace sod
