#include "sod/combs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sod/kernels.hpp"

namespace sod {

std::vector<std::string> CombStructure::labels() const {
  std::vector<std::string> out{"I0"};
  for (const auto& l : slot_labels()) out.push_back(l);
  out.push_back("O0");
  return out;
}

std::vector<std::string> CombStructure::slot_labels() const {
  std::vector<std::string> out;
  for (int k = 1; k <= K; ++k) {
    out.push_back("I" + std::to_string(k));
    out.push_back("O" + std::to_string(k));
  }
  return out;
}

SpaceRegistry CombStructure::registry() const {
  std::vector<Space> spaces{{"I0", d0}};
  for (const auto& l : slot_labels()) spaces.push_back({l, d});
  spaces.push_back({"O0", d0});
  return SpaceRegistry(std::move(spaces));
}

long CombStructure::slot_dim() const {
  long n = 1;
  for (int k = 0; k < 2 * K; ++k) n *= d;
  return n;
}

Comb::Comb(CombStructure structure, const LabeledOperator& choi) : structure_(structure) {
  const auto target = structure_.registry();
  if (choi.registry().size() != target.size())
    throw LabelError("comb operator has the wrong number of spaces");
  for (const auto& s : target.spaces())
    if (choi.registry().dim_of(s.label) != s.dim)
      throw DimensionError("comb space '" + s.label + "' has the wrong dimension");
  const auto order = structure_.labels();
  choi_ = reorder(choi, std::span<const std::string>(order));
}

Comb operator+(const Comb& a, const Comb& b) {
  if (!(a.structure() == b.structure())) throw DimensionError("comb sum over different structures");
  return Comb(a.structure(), a.choi() + b.choi());
}

Comb operator*(double s, const Comb& a) { return Comb(a.structure(), cplx(s) * a.choi()); }

double CombReport::max_residual() const {
  double m = 0.0;
  for (const auto& r : residuals) m = std::max(m, r.value);
  return m;
}

namespace {

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

LabeledOperator with_identity(const LabeledOperator& a, const std::string& label, int dim) {
  LabeledOperator id(SpaceRegistry{{label, dim}}, Matrix::Identity(dim, dim) / static_cast<double>(dim));
  return tensor_product(a, id);
}

}  // namespace

std::vector<std::pair<std::string, Matrix>> causal_residual_operators(const Comb& c) {
  const auto& st = c.structure();
  const int d = st.d;
  const LabeledOperator& C = c.choi();
  std::vector<std::pair<std::string, Matrix>> out;

  // Tr_O0 C = C(K) (x) I^{OK}/d
  LabeledOperator lhs = partial_trace(C, {"O0"});
  const std::string ok_label = "O" + std::to_string(st.K);
  LabeledOperator ck = partial_trace(lhs, {ok_label});
  out.emplace_back("Tr_O0", lhs.matrix() - with_identity(ck, ok_label, d).matrix());

  for (int k = st.K; k >= 2; --k) {
    const std::string ik = "I" + std::to_string(k);
    const std::string prev_o = "O" + std::to_string(k - 1);
    LabeledOperator traced = partial_trace(ck, {ik});
    LabeledOperator next = partial_trace(traced, {prev_o});
    out.emplace_back("Tr_" + ik, traced.matrix() - with_identity(next, prev_o, d).matrix());
    ck = std::move(next);
  }

  LabeledOperator c0 = partial_trace(ck, {"I1"});
  out.emplace_back("Tr_I1", c0.matrix() - C.trace() * Matrix::Identity(st.d0, st.d0) / static_cast<double>(st.d0));
  return out;
}

CombReport validate_deterministic_comb(const Comb& c, double tol) {
  const auto& st = c.structure();
  const int d = st.d;
  CombReport rep;
  const LabeledOperator& C = c.choi();
  const double scale = std::max(1.0, max_abs(C.matrix()));

  rep.residuals.push_back({"hermitian", C.hermiticity_residual() / scale});
  rep.min_eigenvalue = min_eigenvalue(C.hermitian_part());

  const cplx tr = C.trace();
  const double expected = st.d0 * std::pow(static_cast<double>(d), st.K);
  rep.residuals.push_back({"normalization", std::abs(tr - expected) / expected});

  for (const auto& [name, r] : causal_residual_operators(c))
    rep.residuals.push_back({name, max_abs(r) / scale});

  rep.valid = true;
  if (rep.min_eigenvalue < -tol) {
    rep.valid = false;
    rep.failing = "psd";
  }
  for (const auto& r : rep.residuals)
    if (r.value > tol && rep.valid) {
      rep.valid = false;
      rep.failing = r.name;
    }
  return rep;
}

PairReport validate_probabilistic_pair(const Comb& s, const Comb& n, double tol) {
  if (!(s.structure() == n.structure())) throw DimensionError("pair has mismatched structures");
  PairReport rep;
  rep.min_eigenvalue_s = min_eigenvalue(s.choi().hermitian_part());
  rep.min_eigenvalue_n = min_eigenvalue(n.choi().hermitian_part());
  rep.sum = validate_deterministic_comb(s + n, tol);
  rep.valid = rep.sum.valid && rep.min_eigenvalue_s >= -tol && rep.min_eigenvalue_n >= -tol;
  return rep;
}

Channel apply_comb(const Comb& c, const std::vector<Channel>& channels) {
  const auto& st = c.structure();
  if (static_cast<int>(channels.size()) != st.K)
    throw DimensionError("apply_comb: expected " + std::to_string(st.K) + " channels");
  Matrix x = Matrix::Identity(1, 1);
  for (const auto& ch : channels) {
    if (ch.d_in() != st.d || ch.d_out() != st.d)
      throw DimensionError("apply_comb: channel dimension does not match slot dimension");
    x = kron(x, ch.choi().matrix());
  }
  Matrix out = kernels::parallel::contract_middle(c.choi().matrix(), x, st.d0, st.d0);
  return Channel(LabeledOperator(SpaceRegistry{{"I0", st.d0}, {"O0", st.d0}}, std::move(out)));
}

Channel apply_comb_unitary(const Comb& c, const Matrix& u) {
  const Channel ju = choi_of_unitary(u);
  return apply_comb(c, std::vector<Channel>(c.structure().K, ju));
}

double identity_proportionality_residual(const Matrix& m, int d0) {
  const Matrix phi = max_entangled_projector(d0);
  return (m - phi * m * phi).norm() / std::max(1.0, m.norm());
}

NeutralizationResult check_neutralization_direct(const Comb& n, const std::vector<Matrix>& unitaries,
                                                 double tol) {
  const auto& st = n.structure();
  NeutralizationResult res;
  const long dd = static_cast<long>(st.d0) * st.d0;
  Vector phi = Vector::Zero(dd);
  for (int i = 0; i < st.d0; ++i) phi(i * st.d0 + i) = 1.0 / std::sqrt(static_cast<double>(st.d0));

  std::vector<Matrix> xs;
  xs.reserve(unitaries.size());
  for (const auto& u : unitaries) {
    const Matrix j = choi_of_unitary(u).choi().matrix();
    Matrix x = Matrix::Identity(1, 1);
    for (int k = 0; k < st.K; ++k) x = kron(x, j);
    xs.push_back(std::move(x));
  }
  const auto outs = kernels::parallel::contract_middle_batch(n.choi().matrix(), xs, st.d0, st.d0);
  for (const auto& m : outs) {
    const double r = identity_proportionality_residual(m, st.d0);
    res.residuals.push_back(r);
    res.q.push_back((phi.adjoint() * m * phi)(0, 0).real() / st.d0);
    res.max_residual = std::max(res.max_residual, r);
  }
  res.ok = res.max_residual <= tol;
  return res;
}

SymmetricNeutralization check_neutralization_symmetric(const Comb& n, double tol) {
  const auto& st = n.structure();
  const LabeledOperator pi = symmetric_projector(st.K, st.d);
  // Tr_IO(Pi N Pi) = Tr_IO(N Pi) since Pi acts only on traced spaces.
  Matrix t = kernels::parallel::contract_middle(n.choi().matrix(), pi.matrix(), st.d0, st.d0);
  SymmetricNeutralization out;
  out.residual = identity_proportionality_residual(t, st.d0);
  out.reduced = LabeledOperator(SpaceRegistry{{"I0", st.d0}, {"O0", st.d0}}, std::move(t));
  out.ok = out.residual <= tol;
  return out;
}

SuccessAction check_success_action(const Comb& s, const TargetMap& target,
                                   const std::vector<Matrix>& unitaries, double tol) {
  const auto& st = s.structure();
  SuccessAction res;
  std::vector<Matrix> xs;
  for (const auto& u : unitaries) {
    const Matrix j = choi_of_unitary(u).choi().matrix();
    Matrix x = Matrix::Identity(1, 1);
    for (int k = 0; k < st.K; ++k) x = kron(x, j);
    xs.push_back(std::move(x));
  }
  const auto outs = kernels::parallel::contract_middle_batch(s.choi().matrix(), xs, st.d0, st.d0);
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t k = 0; k < unitaries.size(); ++k) {
    const Matrix f = choi_of_unitary(target(unitaries[k])).choi().matrix();
    const double fn2 = f.squaredNorm();
    const double p = f.cwiseProduct(outs[k].conjugate()).sum().real() / fn2;
    const double r = (outs[k] - p * f).norm() / std::sqrt(fn2);
    res.p.push_back(p);
    res.residuals.push_back(r);
    res.max_residual = std::max(res.max_residual, r);
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
  res.spread = unitaries.empty() ? 0.0 : hi - lo;
  res.ok = res.max_residual <= tol;
  return res;
}

DepthTwoResult check_depth_two(const Comb& c, double tol) {
  const auto& st = c.structure();
  if (st.K < 2) throw DimensionError("check_depth_two requires K >= 2");
  const LabeledOperator lhs = partial_trace(c.choi(), {"O0"});
  std::vector<std::string> traced{"O0"};
  std::vector<Space> ident;
  for (int k = 2; k <= st.K; ++k) {
    traced.push_back("O" + std::to_string(k));
    ident.push_back({"O" + std::to_string(k), st.d});
  }
  LabeledOperator head = partial_trace(c.choi(), std::span<const std::string>(traced));
  const SpaceRegistry id_reg(ident);
  const double norm = static_cast<double>(id_reg.total_dim());
  LabeledOperator rhs = tensor_product(head, (1.0 / norm) * LabeledOperator::identity(id_reg));
  const auto order = lhs.registry().labels();
  rhs = reorder(rhs, std::span<const std::string>(order));
  DepthTwoResult out;
  out.residual = max_abs(lhs.matrix() - rhs.matrix()) / std::max(1.0, max_abs(lhs.matrix()));
  out.ok = out.residual <= tol;
  return out;
}

Comb example_deterministic_comb(const CombStructure& s) {
  const double scale = 1.0 / (std::pow(static_cast<double>(s.d), s.K) * s.d0);
  return Comb(s, cplx(scale) * LabeledOperator::identity(s.registry()));
}

Comb identity_wiring_comb(const CombStructure& s) {
  if (s.d0 != s.d) throw DimensionError("identity wiring needs d0 = d");
  const Matrix j = s.d * max_entangled_projector(s.d);
  Matrix m = Matrix::Identity(1, 1);
  for (int k = 0; k <= s.K; ++k) m = kron(m, j);
  return Comb(s, LabeledOperator(s.registry(), m));
}

Comb discard_and_identity_comb(const CombStructure& s) {
  const Matrix jid = s.d0 * max_entangled_projector(s.d0);
  const long n = s.slot_dim();
  LabeledOperator wire(SpaceRegistry{{"I0", s.d0}, {"O0", s.d0}}, jid);
  LabeledOperator slots(slot_registry(s.K, s.d),
                        Matrix::Identity(n, n) / std::pow(static_cast<double>(s.d), s.K));
  return Comb(s, tensor_product(wire, slots));
}

}  // namespace sod
