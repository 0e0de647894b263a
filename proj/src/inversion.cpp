#include "sod/inversion.hpp"

#include <cmath>
#include <stdexcept>

#include "sod/kernels.hpp"

namespace sod {

std::string to_string(NeutralMode m) { return m == NeutralMode::symmetric ? "symmetric" : "spanning"; }

NeutralMode neutral_mode_from_string(const std::string& s) {
  if (s == "symmetric") return NeutralMode::symmetric;
  if (s == "spanning") return NeutralMode::spanning;
  throw std::invalid_argument("unknown neutral mode '" + s + "'");
}

namespace {

Matrix tensor_power(const Matrix& j, int K) {
  Matrix x = Matrix::Identity(1, 1);
  for (int k = 0; k < K; ++k) x = kron(x, j);
  return x;
}

}  // namespace

InversionProblem build_inversion_problem(int d, int K, NeutralMode mode, std::uint64_t seed, bool reduce_symmetry) {
  if (d != 2) throw DimensionError("build_inversion_problem: only d = 2 is supported");
  if (K < 1 || K > 2) throw DimensionError("build_inversion_problem: K must be 1 or 2");
  InversionProblem ip;
  ip.structure = CombStructure{K, d, d};
  ip.mode = mode;
  const CombStructure st = ip.structure;
  const int dim = static_cast<int>(st.registry().total_dim());
  const int d0 = st.d0;
  ip.block_s = ip.problem.add_block("S", dim);
  ip.block_n = ip.problem.add_block("N", dim);
  ip.spanning = span_dimension(d, K, seed).spanning_unitaries;

  const Matrix zero_out = Matrix::Zero(d0 * d0, d0 * d0);
  const Matrix phi = max_entangled_projector(d0);

  // success on every spanning unitary: Tr_IO[S (J_U^{(x)K})^T] - p J_{U^-1} = 0
  for (std::size_t i = 0; i < ip.spanning.size(); ++i) {
    const Matrix x = tensor_power(choi_of_unitary(ip.spanning[i]).choi().matrix(), K);
    const Matrix target = choi_of_unitary(ip.spanning[i].adjoint()).choi().matrix();
    ip.problem.add_equality(
        "success_" + std::to_string(i),
        {{ip.block_s, [x, d0](const Matrix& s) { return kernels::serial::contract_middle(s, x, d0, d0); }}},
        Matrix(-target), zero_out);
  }

  // draw branch proportional to J_id, written as M - phi+ M phi+ = 0
  if (mode == NeutralMode::symmetric) {
    const Matrix pi = symmetric_projector(K, d).matrix();
    ip.problem.add_equality("neutral_symmetric",
                            {{ip.block_n,
                              [pi, phi, d0](const Matrix& n) {
                                const Matrix t = kernels::serial::contract_middle(n, pi, d0, d0);
                                return Matrix(t - phi * t * phi);
                              }}},
                            Matrix(), zero_out);
  } else {
    for (std::size_t i = 0; i < ip.spanning.size(); ++i) {
      const Matrix x = tensor_power(choi_of_unitary(ip.spanning[i]).choi().matrix(), K);
      ip.problem.add_equality("neutral_" + std::to_string(i),
                              {{ip.block_n,
                                [x, phi, d0](const Matrix& n) {
                                  const Matrix m = kernels::serial::contract_middle(n, x, d0, d0);
                                  return Matrix(m - phi * m * phi);
                                }}},
                              Matrix(), zero_out);
    }
  }

  // causal chain of S + N, one group per equation
  const auto reg = st.registry();
  const auto names = causal_residual_operators(Comb(st, LabeledOperator::zero(reg)));
  for (std::size_t e = 0; e < names.size(); ++e) {
    auto map = [st, reg, e](const Matrix& c) {
      return causal_residual_operators(Comb(st, LabeledOperator(reg, c)))[e].second;
    };
    const long m = names[e].second.rows();
    ip.problem.add_equality("causal_" + names[e].first, {{ip.block_s, map}, {ip.block_n, map}}, Matrix(),
                            Matrix::Zero(m, m));
  }

  // Tr(S + N) = d0 d^K
  auto trace = [](const Matrix& c) { return Matrix::Constant(1, 1, c.trace()); };
  ip.problem.add_equality("normalization", {{ip.block_s, trace}, {ip.block_n, trace}}, Matrix(),
                          Matrix::Constant(1, 1, d0 * std::pow(static_cast<double>(d), K)));

  // U -> V U V^dagger maps the feasible set to itself; on the comb this is
  // conj(V) on I0 and every Ok, V on every Ik and on O0.
  if (reduce_symmetry) {
    std::vector<bool> conj{true};
    for (int k = 0; k < K; ++k) {
      conj.push_back(false);
      conj.push_back(true);
    }
    conj.push_back(false);
    const BlockSymmetry sym = su2_symmetry(conj);
    ip.problem.set_symmetry(ip.block_s, sym);
    ip.problem.set_symmetry(ip.block_n, sym);
  }
  return ip;
}

SdpOptions inversion_solver_options() {
  SdpOptions opt;
  opt.tol = 1e-9;
  return opt;
}

InversionSolution solve_inversion(const InversionProblem& prob, const SdpOptions& opt) {
  SdpOptions o = opt;
  if (o.trace_bound <= 0.0)
    o.trace_bound = prob.structure.d0 * std::pow(static_cast<double>(prob.structure.d), prob.structure.K);
  SdpSolution sol = solve_sdp(prob.problem, o);
  const auto reg = prob.structure.registry();
  Comb s(prob.structure, LabeledOperator(reg, sol.blocks[prob.block_s]));
  Comb n(prob.structure, LabeledOperator(reg, sol.blocks[prob.block_n]));
  const double p = sol.p;
  const double upper = sol.p_upper;
  return InversionSolution{std::move(sol), std::move(s), std::move(n), p, upper};
}

InversionComparison optimal_inversion_probability(int d, int K, const SdpOptions& opt, std::uint64_t seed) {
  InversionComparison out{solve_inversion(build_inversion_problem(d, K, NeutralMode::symmetric, seed), opt),
                          solve_inversion(build_inversion_problem(d, K, NeutralMode::spanning, seed), opt)};
  out.p = out.symmetric.p;
  out.gap = std::abs(out.symmetric.p - out.spanning.p);
  return out;
}

}  // namespace sod
