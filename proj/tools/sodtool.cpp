// Command-line driver. Every subcommand prints one JSON result document on
// stdout; diagnostics go to stderr.
//
// Exit codes: 0 ok, 1 invalid or infeasible, 2 usage / I/O / format error,
// 3 numerical failure.

#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sod/inversion.hpp"
#include "sod/io.hpp"
#include "sod/protocols.hpp"

using namespace sod;
using io::json;

namespace {

int exit_code(const std::string& status) {
  if (status == "ok") return 0;
  if (status == "invalid" || status == "infeasible") return 1;
  return 3;
}

class Report {
 public:
  explicit Report(std::vector<std::string> argv) {
    doc_["command"] = std::move(argv);
    doc_["tolerances"] = json::object();
    doc_["outputs"] = json::object();
    doc_["residuals"] = json::array();
  }
  void seed(std::uint64_t s) { doc_["seed"] = s; }
  void tolerance(const std::string& name, double t) { doc_["tolerances"][name] = t; }
  json& out() { return doc_["outputs"]; }
  // Records value <= tol; returns whether it holds.
  bool residual(const std::string& name, double value, double tol) {
    const bool ok = std::isfinite(value) && value <= tol;
    doc_["residuals"].push_back({{"name", name}, {"value", value}, {"tol", tol}, {"ok", ok}});
    all_ok_ &= ok;
    return ok;
  }
  bool all_ok() const { return all_ok_; }
  int finish(const std::string& status) {
    doc_["status"] = status;
    std::cout << doc_.dump(2) << '\n';
    return exit_code(status);
  }

 private:
  json doc_;
  bool all_ok_ = true;
};

double negative_part(double min_eig) { return std::max(0.0, -min_eig); }

std::vector<Matrix> haar_set(int d, int n, std::uint64_t seed) {
  std::vector<Matrix> out;
  for (int k = 0; k < n; ++k) out.push_back(haar_unitary(d, derive_seed(seed, static_cast<std::uint64_t>(k))));
  return out;
}

// Shared checks for any (S, N) pair: comb validity, success action on fresh
// unitaries, neutralization, depth-two condition.
struct PairTolerances {
  double causal = 1e-8;
  double psd = 1e-9;
  double action = 1e-7;
};

void check_pair(Report& rep, const Comb& s, const Comb& n, TargetKind target, int samples, std::uint64_t seed,
                const PairTolerances& tol) {
  const PairReport pair = validate_probabilistic_pair(s, n, tol.causal);
  for (const auto& r : pair.sum.residuals) rep.residual("causal " + r.name, r.value, tol.causal);
  rep.residual("negative eigenvalue S", negative_part(pair.min_eigenvalue_s), tol.psd);
  rep.residual("negative eigenvalue N", negative_part(pair.min_eigenvalue_n), tol.psd);

  const SodCertificate cert = certify_pair(s, n, target, samples, seed);
  rep.residual("success action (relative)", cert.max_success_residual, tol.action);
  rep.residual("draw proportional to identity (relative)", cert.max_draw_residual, tol.action);
  rep.residual("success probability spread", cert.p_spread, tol.action);
  if (s.structure().K >= 2) rep.residual("depth-two condition", check_depth_two(s + n, tol.causal).residual, tol.causal);
  double p_mean = 0.0, q_min = 1.0, q_max = 0.0;
  for (const auto& rec : cert.samples) {
    p_mean += rec.p / static_cast<double>(cert.samples.size());
    q_min = std::min(q_min, rec.q);
    q_max = std::max(q_max, rec.q);
  }
  rep.out()["samples"] = samples;
  rep.out()["p_mean"] = p_mean;
  rep.out()["q_range"] = {q_min, q_max};
}

int cmd_span_dim(Report& rep, int d, int k, std::uint64_t seed, double rank_tol) {
  rep.seed(seed);
  rep.tolerance("rank_tol", rank_tol);
  const SpanResult r = span_dimension(d, k, seed, rank_tol);
  rep.out()["dimension"] = r.dim;
  rep.out()["samples_drawn"] = r.samples_drawn;
  rep.out()["converged"] = r.converged;
  if (k == 1) rep.out()["formula"] = (d * d - 1) * (d * d - 1) + 1;
  return rep.finish(r.converged ? "ok" : "numerical-failure");
}

int cmd_twirl(Report& rep, int d, int samples, std::uint64_t seed, double tol) {
  rep.seed(seed);
  const TwirlResult t = twirl_Q(d, samples, seed);
  Eigen::SelfAdjointEigenSolver<Matrix> es(t.exact.matrix());
  const double top = es.eigenvalues().cwiseAbs().maxCoeff();
  int rank = 0;
  for (long k = 0; k < es.eigenvalues().size(); ++k) rank += std::abs(es.eigenvalues()(k)) > 1e-8 * top;
  const int expected = (d * d - 1) * (d * d - 1) + 1;
  rep.out()["rank_exact"] = rank;
  rep.out()["rank_expected"] = expected;
  rep.out()["samples"] = samples;
  rep.residual("Frobenius deviation of the estimate", t.deviation, tol);
  return rep.finish(rep.all_ok() && rank == expected ? "ok" : "invalid");
}

struct SolveArgs {
  int d = 2;
  int k = 2;
  std::string neutral = "symmetric";
  double tol = 1e-9;
  long max_iter = 200000;
  std::uint64_t seed = 1;
  double check_tol = 1e-5;
  int samples = 100;
  std::string out;
};

int cmd_solve(Report& rep, const SolveArgs& a) {
  rep.seed(a.seed);
  rep.tolerance("solver_tol", a.tol);
  rep.tolerance("check_tol", a.check_tol);
  const NeutralMode mode = neutral_mode_from_string(a.neutral);
  SdpOptions opt = inversion_solver_options();
  opt.tol = a.tol;
  opt.max_iter = a.max_iter;
  const auto t0 = std::chrono::steady_clock::now();
  const InversionSolution sol = solve_inversion(build_inversion_problem(a.d, a.k, mode, a.seed), opt);
  std::cerr << "solve time " << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()
            << " s\n";
  rep.out()["p"] = sol.p;
  rep.out()["p_upper_bound"] = sol.p_upper;
  rep.out()["implied_epsilon"] = sol.p / 0.25;
  rep.out()["neutral_mode"] = to_string(mode);
  rep.out()["solver_status"] = to_string(sol.sdp.status);
  rep.out()["iterations"] = sol.sdp.iterations;
  rep.out()["dual_residual"] = sol.sdp.dual_residual;
  if (sol.sdp.status == SdpStatus::infeasible_suspected) return rep.finish("infeasible");

  rep.residual("primal equality residual", sol.sdp.primal_residual, a.check_tol);
  const PairReport pair = validate_probabilistic_pair(sol.s, sol.n, a.check_tol);
  for (const auto& r : pair.sum.residuals) rep.residual("causal " + r.name, r.value, a.check_tol);
  rep.residual("negative eigenvalue S", negative_part(pair.min_eigenvalue_s), 1e-7);
  rep.residual("negative eigenvalue N", negative_part(pair.min_eigenvalue_n), 1e-7);
  const auto fresh = haar_set(a.d, a.samples, derive_seed(a.seed, 7));
  rep.residual("draw proportional to identity on fresh unitaries",
               check_neutralization_direct(sol.n, fresh, a.check_tol).max_residual, a.check_tol);
  if (sol.p > a.check_tol) {
    const SuccessAction act = check_success_action(sol.s, target_function(TargetKind::inverse), fresh, a.check_tol);
    rep.residual("success action on fresh unitaries (relative)", act.max_residual, a.check_tol);
    rep.residual("success probability spread", act.spread, 10 * a.check_tol);
  }
  if (!a.out.empty()) io::write_json(a.out, io::pair_to_json({sol.s, sol.n, TargetKind::inverse, sol.p}));
  return rep.finish(rep.all_ok() ? "ok" : "numerical-failure");
}

OneSlotComb protocol_comb(const std::string& name, int d) {
  if (name == "teleportation") {
    if (d != 2) throw std::invalid_argument("the teleportation comb is defined for d = 2");
    return teleportation_sstgs();
  }
  if (name == "transpose") return transpose_sstgs(d);
  if (name == "identity") return identity_sstgs(d);
  throw std::invalid_argument("unknown protocol '" + name + "'");
}

int cmd_export(Report& rep, const std::string& protocol, int d, const std::string& out) {
  const OneSlotComb c = protocol_comb(protocol, d);
  io::write_json(out, io::one_slot_to_json(c));
  rep.out()["file"] = out;
  rep.out()["target"] = to_string(c.target);
  rep.out()["p_nominal"] = c.p_nominal;
  return rep.finish("ok");
}

struct PairArgs {
  int samples = 100;
  std::uint64_t seed = 1;
  PairTolerances tol;
};

void pair_tolerances(Report& rep, const PairArgs& a) {
  rep.seed(a.seed);
  rep.tolerance("causal", a.tol.causal);
  rep.tolerance("psd", a.tol.psd);
  rep.tolerance("action", a.tol.action);
}

int cmd_build(Report& rep, const std::string& input, const std::string& epsilon, const std::string& out,
              const PairArgs& a) {
  pair_tolerances(rep, a);
  const OneSlotComb c = io::one_slot_from_json(io::read_json(input));
  double eps = 0.0;
  if (epsilon != "auto") {
    try {
      eps = std::stod(epsilon);
    } catch (const std::exception&) {
      throw io::FormatError("--epsilon must be 'auto' or a number");
    }
    if (!(eps > 0.0)) throw io::FormatError("--epsilon must be positive");
  }
  SodBuild b;
  try {
    b = build_success_or_draw(c, c.d(), eps, a.samples, a.seed);
  } catch (const ConstructionError& e) {
    rep.out()["error"] = e.what();
    rep.residual("construction", e.residual(), 0.0);
    return rep.finish("invalid");
  }
  rep.out()["epsilon"] = b.certificate.epsilon;
  rep.out()["slots"] = c.d();
  check_pair(rep, b.s, b.n, c.target, a.samples, a.seed, a.tol);
  rep.residual("lift trace residual", b.lift.trace_c_residual, a.tol.causal);
  rep.residual("lift support residual", b.lift.support_residual, a.tol.causal);
  io::write_json(out, io::pair_to_json({b.s, b.n, c.target, b.certificate.epsilon}));
  return rep.finish(rep.all_ok() ? "ok" : "invalid");
}

int cmd_verify(Report& rep, const std::string& path, const PairArgs& a) {
  pair_tolerances(rep, a);
  const io::PairFile p = io::pair_from_json(io::read_json(path));
  rep.out()["epsilon"] = p.epsilon;
  rep.out()["target"] = to_string(p.target);
  check_pair(rep, p.s, p.n, p.target, a.samples, a.seed, a.tol);
  return rep.finish(rep.all_ok() ? "ok" : "invalid");
}

int cmd_simulate(Report& rep, const std::string& protocol, int trials, int max_rounds, std::uint64_t seed) {
  if (protocol != "teleport-inversion") throw std::invalid_argument("unknown protocol '" + protocol + "'");
  rep.seed(seed);
  const RusStatistics st = simulate_teleport_inversion(trials, max_rounds, seed, true);
  double min_fid = 1.0;
  for (const auto& r : st.records)
    if (r.success) min_fid = std::min(min_fid, r.fidelity);
  const double q = 1.0 - st.p_nominal;
  const double nominal_fail = std::pow(q, max_rounds);
  const double sigma = std::sqrt(nominal_fail * (1.0 - nominal_fail) / trials);
  rep.out()["trials"] = st.trials;
  rep.out()["max_rounds"] = st.max_rounds;
  rep.out()["p_nominal"] = st.p_nominal;
  rep.out()["first_round_success_fraction"] = st.success_by_round.front();
  rep.out()["success_fraction"] = static_cast<double>(st.successes) / trials;
  rep.out()["failure_fraction"] = st.failure_fraction;
  rep.out()["failure_nominal"] = nominal_fail;
  rep.out()["mean_rounds"] = st.mean_rounds;
  rep.out()["mean_calls"] = st.mean_calls;
  rep.out()["success_by_round"] = st.success_by_round;
  rep.tolerance("failure_tail_sigmas", 3.0);
  rep.residual("failure tail deviation", std::abs(st.failure_fraction - nominal_fail), 3.0 * sigma + 1e-15);
  rep.residual("output infidelity of successful trials", 1.0 - min_fid, 1e-12);
  return rep.finish(rep.all_ok() ? "ok" : "invalid");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"success-or-draw higher-order quantum operations"};
  app.require_subcommand(1);

  int d = 2, k = 1, samples = 2000, trials = 100000, max_rounds = 10;
  std::uint64_t seed = 1;
  double rank_tol = 1e-8, twirl_tol = 0.05;
  auto* span = app.add_subcommand("span-dim", "dimension of span{J_U^(x)K}");
  span->add_option("--d", d, "qudit dimension")->required();
  span->add_option("--k", k, "number of calls")->required();
  span->add_option("--seed", seed, "root seed");
  span->add_option("--rank-tol", rank_tol, "relative rank tolerance");

  auto* twirl = app.add_subcommand("twirl", "sampled twirl operator against the exact one");
  twirl->add_option("--d", d, "qudit dimension")->required();
  twirl->add_option("--samples", samples, "Haar samples")->required();
  twirl->add_option("--seed", seed, "root seed");
  twirl->add_option("--tol", twirl_tol, "allowed Frobenius deviation");

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve-inversion", "optimal success-or-draw unitary inversion SDP");
  solve->add_option("--d", sa.d, "qudit dimension")->required();
  solve->add_option("--k", sa.k, "number of calls")->required();
  solve->add_option("--neutral", sa.neutral, "draw constraint form")
      ->required()
      ->check(CLI::IsMember({"symmetric", "spanning"}));
  solve->add_option("--tol", sa.tol, "solver stopping tolerance");
  solve->add_option("--max-iter", sa.max_iter, "solver iteration cap");
  solve->add_option("--seed", sa.seed, "seed of the spanning set and checks");
  solve->add_option("--check-tol", sa.check_tol, "tolerance of the reported residuals");
  solve->add_option("--samples", sa.samples, "fresh Haar unitaries for the checks");
  solve->add_option("--out", sa.out, "pair file to write");

  std::string protocol = "teleportation", out;
  auto* exp = app.add_subcommand("export-sstgs", "write a one-slot comb file");
  exp->add_option("--protocol", protocol, "teleportation | transpose | identity");
  exp->add_option("--d", d, "qudit dimension");
  exp->add_option("--out", out, "output file")->required();

  PairArgs pa;
  std::string input, epsilon = "auto", pair_path;
  auto add_pair_flags = [&](CLI::App* sub) {
    sub->add_option("--samples", pa.samples, "Haar unitaries for the action checks");
    sub->add_option("--seed", pa.seed, "root seed");
    sub->add_option("--tol", pa.tol.causal, "causal and lift residual tolerance");
    sub->add_option("--psd-tol", pa.tol.psd, "allowed negative eigenvalue");
    sub->add_option("--action-tol", pa.tol.action, "relative action residual tolerance");
  };
  auto* build = app.add_subcommand("build", "universal construction from a one-slot comb");
  build->add_option("--input", input, "one-slot comb file")->required();
  build->add_option("--epsilon", epsilon, "auto or a positive number");
  build->add_option("--out", out, "pair file to write")->required();
  add_pair_flags(build);

  auto* verify = app.add_subcommand("verify", "check a stored (S, N) pair");
  verify->add_option("--pair", pair_path, "pair file")->required();
  add_pair_flags(verify);

  std::string sim_protocol;
  auto* sim = app.add_subcommand("simulate", "repeat-until-success Monte Carlo");
  sim->add_option("--protocol", sim_protocol, "teleport-inversion")->required();
  sim->add_option("--trials", trials, "number of trials")->required();
  sim->add_option("--max-rounds", max_rounds, "round cap per trial");
  sim->add_option("--seed", seed, "root seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 2;
  }

  Report rep(std::vector<std::string>(argv, argv + argc));
  try {
    if (*span) return cmd_span_dim(rep, d, k, seed, rank_tol);
    if (*twirl) return cmd_twirl(rep, d, samples, seed, twirl_tol);
    if (*solve) return cmd_solve(rep, sa);
    if (*exp) return cmd_export(rep, protocol, d, out);
    if (*build) return cmd_build(rep, input, epsilon, out, pa);
    if (*verify) return cmd_verify(rep, pair_path, pa);
    if (*sim) return cmd_simulate(rep, sim_protocol, trials, max_rounds, seed);
  } catch (const io::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
