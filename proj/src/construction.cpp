#include "sod/construction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "sod/kernels.hpp"

namespace sod {

std::string to_string(TargetKind t) {
  switch (t) {
    case TargetKind::identity: return "identity";
    case TargetKind::inverse: return "inverse";
    case TargetKind::transpose: return "transpose";
    case TargetKind::conjugate: return "conjugate";
  }
  return "identity";
}

TargetKind target_from_string(const std::string& s) {
  if (s == "identity") return TargetKind::identity;
  if (s == "inverse") return TargetKind::inverse;
  if (s == "transpose") return TargetKind::transpose;
  if (s == "conjugate") return TargetKind::conjugate;
  throw std::invalid_argument("unknown target map '" + s + "'");
}

Matrix apply_target(TargetKind t, const Matrix& u) {
  switch (t) {
    case TargetKind::identity: return u;
    case TargetKind::inverse: return u.adjoint();
    case TargetKind::transpose: return u.transpose();
    case TargetKind::conjugate: return u.conjugate();
  }
  return u;
}

TargetMap target_function(TargetKind t) {
  return [t](const Matrix& u) { return apply_target(t, u); };
}

Comb OneSlotComb::as_comb() const { return Comb(CombStructure{1, d(), d0()}, choi); }

namespace {

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

double ipow(double base, int e) {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= base;
  return r;
}

std::vector<std::string> nio_labels(int d) {
  std::vector<std::string> out{"I0"};
  for (const auto& l : CombStructure{d, d, 1}.slot_labels()) out.push_back(l);
  return out;
}

LabeledOperator single(const std::string& label, const Matrix& m) {
  return LabeledOperator(SpaceRegistry{{label, static_cast<int>(m.rows())}}, m);
}

LabeledOperator on(std::vector<Space> spaces, Matrix m) {
  return LabeledOperator(SpaceRegistry(std::move(spaces)), std::move(m));
}

// I^{IkOk}/d for k = from..d, each slot of dimension d.
LabeledOperator identity_pairs(int from, int d) {
  std::vector<Space> spaces;
  for (int k = from; k <= d; ++k) {
    spaces.push_back({"I" + std::to_string(k), d});
    spaces.push_back({"O" + std::to_string(k), d});
  }
  const SpaceRegistry reg(spaces);
  const long n = reg.total_dim();
  return LabeledOperator(reg, Matrix::Identity(n, n) / ipow(d, static_cast<int>(spaces.size() / 2)));
}

LabeledOperator assemble(const std::vector<LabeledOperator>& parts, const std::vector<std::string>& order) {
  LabeledOperator out = tensor_product(std::span<const LabeledOperator>(parts));
  return reorder(out, std::span<const std::string>(order));
}

Matrix kron_all(const std::vector<Matrix>& fs) {
  Matrix out = Matrix::Identity(1, 1);
  for (const auto& f : fs) out = kron(out, f);
  return out;
}

// Tr(a b) without forming the product.
cplx trace_product(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b.transpose()).sum(); }

}  // namespace

// --- one-slot decomposition --------------------------------------------------

LabeledOperator OneSlotDecomposition::reconstruct() const {
  const auto h = hermitian_basis(d0);
  const auto g = hermitian_basis(d);
  const int nh = d0 * d0, ng = d * d;
  Matrix x = marginal.matrix();
  const Matrix id = Matrix::Identity(d, d);
  for (int i = 1; i < nh; ++i)
    for (int j = 1; j < ng; ++j) {
      x += alpha(i - 1, j - 1) * kron_all({h.g[i], g.g[j], id});
      x += beta(i - 1, j - 1) * kron_all({h.g[i], id, g.g[j]});
      for (int k = 1; k < ng; ++k) {
        const double c = gamma[((i - 1) * (ng - 1) + (j - 1)) * (ng - 1) + (k - 1)];
        if (c != 0.0) x += c * kron_all({h.g[i], g.g[j], g.g[k]});
      }
    }
  return LabeledOperator(marginal.registry(), x);
}

OneSlotDecomposition decompose_one_slot(const OneSlotComb& s, double gamma_tol) {
  OneSlotDecomposition dec;
  dec.d0 = s.d0();
  dec.d = s.d();
  const int d0 = dec.d0, d = dec.d;
  const LabeledOperator x = reorder(partial_trace(s.choi, {"O0"}), {"I0", "I1", "O1"});
  const auto h = hermitian_basis(d0);
  const auto g = hermitian_basis(d);
  const int nh = d0 * d0, ng = d * d;
  const double norm = static_cast<double>(d0) * d * d;

  dec.alpha = Eigen::MatrixXd::Zero(nh - 1, ng - 1);
  dec.beta = Eigen::MatrixXd::Zero(nh - 1, ng - 1);
  dec.gamma.assign(static_cast<std::size_t>(nh - 1) * (ng - 1) * (ng - 1), 0.0);

  std::vector<Matrix> gjk(ng * ng);
  for (int j = 0; j < ng; ++j)
    for (int k = 0; k < ng; ++k) gjk[j * ng + k] = kron(g.g[j], g.g[k]);

  for (int i = 1; i < nh; ++i)
    for (int j = 0; j < ng; ++j)
      for (int k = 0; k < ng; ++k) {
        const cplx c = trace_product(kron(h.g[i], gjk[j * ng + k]), x.matrix()) / norm;
        dec.max_imag = std::max(dec.max_imag, std::abs(c.imag()));
        const double v = c.real();
        if (j == 0 && k == 0) {
          dec.max_unplaced = std::max(dec.max_unplaced, std::abs(v));
        } else if (k == 0) {
          dec.alpha(i - 1, j - 1) = v;
        } else if (j == 0) {
          dec.beta(i - 1, k - 1) = v;
        } else {
          dec.gamma[((i - 1) * (ng - 1) + (j - 1)) * (ng - 1) + (k - 1)] = v;
          dec.max_gamma = std::max(dec.max_gamma, std::abs(v));
        }
      }
  dec.gamma_flagged = dec.max_gamma > gamma_tol;

  const LabeledOperator tr0 = partial_trace(x, {"I0"});
  dec.marginal = tensor_product(single("I0", Matrix::Identity(d0, d0) / static_cast<double>(d0)), tr0);
  dec.reconstruction_residual = max_abs(dec.reconstruct().matrix() - x.matrix());
  if (dec.reconstruction_residual > 1e-8)
    throw ConstructionError("one-slot decomposition does not reconstruct its input",
                            dec.reconstruction_residual);
  return dec;
}

// --- antisymmetric coefficients ----------------------------------------------

Matrix AntisymCoefficients::group_operator(int m) const {
  const auto g = hermitian_basis(d);
  const long n = static_cast<long>(std::llround(ipow(d, m)));
  Matrix y = Matrix::Zero(n, n);
  for (const auto& t : groups[m]) {
    std::vector<Matrix> fs;
    for (int k : t.k) fs.push_back(g.g[k]);
    y += t.a * kron_all(fs);
  }
  return y;
}

AntisymCoefficients antisym_coefficients(int d) {
  if (d < 2) throw DimensionError("antisym_coefficients: d must be at least 2");
  AntisymCoefficients out;
  out.d = d;
  out.groups.assign(d + 1, {});
  const auto g = hermitian_basis(d);
  const int ng = d * d;

  // Support of |A_d>: one amplitude per permutation.
  const auto perms = all_permutations(d);
  const double amp = 1.0 / std::sqrt(static_cast<double>(perms.size()));
  std::vector<double> a(perms.size());
  for (std::size_t p = 0; p < perms.size(); ++p) a[p] = amp * permutation_sign(perms[p]);

  long count = 1;
  for (int k = 0; k < d; ++k) count *= ng;
  std::vector<int> idx(d, 0);
  for (long n = 0; n < count; ++n) {
    long rem = n;
    for (int k = d - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(rem % ng);
      rem /= ng;
    }
    cplx c = 0.0;
    for (std::size_t x = 0; x < perms.size(); ++x)
      for (std::size_t y = 0; y < perms.size(); ++y) {
        cplx prod = a[x] * a[y];
        for (int k = 0; k < d && prod != 0.0; ++k) prod *= g.g[idx[k]](perms[x][k], perms[y][k]);
        c += prod;
      }
    int m = 0;
    for (int k = 0; k < d; ++k)
      if (idx[k] != 0) m = k + 1;
    const double v = c.real();
    if (m == 0) {
      out.constant = v;
    } else if (m == 1) {
      out.max_single_factor = std::max(out.max_single_factor, std::abs(v));
    } else if (std::abs(v) > 1e-14) {
      out.groups[m].push_back({std::vector<int>(idx.begin(), idx.begin() + m), v});
    }
  }
  if (out.max_single_factor > 1e-12 || std::abs(out.constant - 1.0) > 1e-12)
    throw ConstructionError("antisymmetric expansion has a term the grouping cannot hold",
                            std::max(out.max_single_factor, std::abs(out.constant - 1.0)));

  const long dim = static_cast<long>(std::llround(ipow(d, d)));
  Matrix rec = Matrix::Identity(dim, dim);
  for (int m = 2; m <= d; ++m) {
    const long rest = static_cast<long>(std::llround(ipow(d, d - m)));
    rec += kron(out.group_operator(m), Matrix::Identity(rest, rest));
  }
  out.reconstruction_residual = max_abs(rec - ipow(d, d) * antisymmetric_state(d).matrix());
  return out;
}

// --- success part --------------------------------------------------------------

Comb build_success_part(const OneSlotComb& s, double epsilon, int K) {
  const CombStructure st{K, s.d(), s.d0()};
  LabeledOperator op = cplx(epsilon) * s.choi;
  if (K >= 2) {
    std::vector<Space> spaces;
    for (int k = 2; k <= K; ++k) {
      spaces.push_back({"I" + std::to_string(k), st.d});
      spaces.push_back({"O" + std::to_string(k), st.d});
    }
    const SpaceRegistry reg(spaces);
    const long n = reg.total_dim();
    op = tensor_product(cplx(epsilon) * s.choi,
                        LabeledOperator(reg, Matrix::Identity(n, n) / ipow(st.d, K - 1)));
  }
  return Comb(st, op);
}

// --- neutral part on (I0, I, O) ----------------------------------------------

double NeutralPartial::max_causal() const {
  double m = 0.0;
  for (const auto& r : causal) m = std::max(m, r.value);
  return m;
}

namespace {

struct PartialLines {
  LabeledOperator bulk;     // I / d^d
  LabeledOperator marg;     // marginal line
  LabeledOperator alpha1;   // alpha on slot 1
  LabeledOperator alpha2;   // -alpha on slot 2
  LabeledOperator beta;     // beta line
  LabeledOperator cascade;  // sum of beta a_{m,k} lines
};

Matrix coefficient_operator(const Eigen::MatrixXd& c, const HermBasis& h, const HermBasis& g) {
  Matrix out = Matrix::Zero(h.dim * g.dim, h.dim * g.dim);
  for (long i = 0; i < c.rows(); ++i)
    for (long j = 0; j < c.cols(); ++j)
      if (c(i, j) != 0.0) out += c(i, j) * kron(h.g[i + 1], g.g[j + 1]);
  return out;
}

PartialLines partial_lines(const OneSlotDecomposition& dec, const AntisymCoefficients& coeffs) {
  const int d = dec.d, d0 = dec.d0;
  if (coeffs.d != d) throw DimensionError("antisymmetric coefficients built for a different d");
  const auto order = nio_labels(d);
  const auto h = hermitian_basis(d0);
  const auto g = hermitian_basis(d);
  const Matrix id = Matrix::Identity(d, d);
  const Matrix a_op = coefficient_operator(dec.alpha, h, g);
  const Matrix b_op = coefficient_operator(dec.beta, h, g);

  PartialLines L;
  std::vector<Space> all{{"I0", d0}};
  for (const auto& l : CombStructure{d, d, d0}.slot_labels()) all.push_back({l, d});
  const SpaceRegistry reg(all);
  const long n = reg.total_dim();
  L.bulk = LabeledOperator(reg, Matrix::Identity(n, n) / ipow(d, d));

  auto with_tail = [&](std::vector<LabeledOperator> parts, int from) {
    if (from <= d) parts.push_back(identity_pairs(from, d));
    return assemble(parts, order);
  };

  L.marg = with_tail({dec.marginal}, 2);
  L.alpha1 = with_tail({on({{"I0", d0}, {"I1", d}}, a_op), single("O1", id)}, 2);
  L.alpha2 = with_tail({on({{"I0", d0}, {"I2", d}}, -a_op),
                        on({{"I1", d}, {"O1", d}}, Matrix::Identity(d * d, d * d) / static_cast<double>(d)),
                        single("O2", id)},
                       3);
  L.beta = with_tail({on({{"I0", d0}, {"O1", d}}, b_op), single("I1", id)}, 2);

  L.cascade = LabeledOperator::zero(reg);
  for (int m = 2; m <= d; ++m) {
    if (coeffs.groups[m].empty()) continue;
    std::vector<Space> ins;
    for (int k = 1; k <= m; ++k) ins.push_back({"I" + std::to_string(k), d});
    std::vector<Space> outs;
    for (int k = 2; k <= m; ++k) outs.push_back({"O" + std::to_string(k), d});
    const SpaceRegistry out_reg(outs);
    const long no = out_reg.total_dim();
    std::vector<LabeledOperator> parts{on({{"I0", d0}, {"O1", d}}, b_op), on(ins, coeffs.group_operator(m)),
                                       LabeledOperator(out_reg, Matrix::Identity(no, no) / ipow(d, m - 1))};
    L.cascade += with_tail(parts, m + 1);
  }
  return L;
}

LabeledOperator combine(const PartialLines& L, double eps) {
  LabeledOperator rest = L.marg + L.alpha1 + L.alpha2 + L.beta + L.cascade;
  return L.bulk - cplx(eps) * rest;
}

// Tr_k X - (Tr_{k, prev} X) (x) I^{prev}/d, returning the reduced operator.
double chain_step(const LabeledOperator& x, const std::string& traced, const std::string& prev, int d,
                  LabeledOperator& reduced, LabeledOperator* lhs_out = nullptr) {
  LabeledOperator t = partial_trace(x, {traced});
  reduced = partial_trace(t, {prev});
  const LabeledOperator rhs = tensor_product(reduced, single(prev, Matrix::Identity(d, d) / static_cast<double>(d)));
  const auto order = t.registry().labels();
  const Matrix diff = t.matrix() - reorder(rhs, std::span<const std::string>(order)).matrix();
  if (lhs_out) *lhs_out = LabeledOperator(t.registry(), diff);
  return max_abs(diff);
}

double symmetric_condition_residual(const LabeledOperator& n, int K, int d, int d0) {
  const auto perms = kernels::slot_permutations(K, d, d0, 1);
  const Matrix pnp = kernels::parallel::sandwich_average(n.matrix(), perms);
  LabeledOperator sym(n.registry(), pnp);
  const LabeledOperator tr0 = partial_trace(sym, {"I0"});
  const Matrix rhs = kron(Matrix::Identity(d0, d0) / static_cast<double>(d0), tr0.matrix());
  return max_abs(pnp - rhs);
}

}  // namespace

NeutralPartial build_neutral_partial(const OneSlotDecomposition& dec, const AntisymCoefficients& coeffs,
                                     double epsilon) {
  const int d = dec.d, d0 = dec.d0;
  const PartialLines L = partial_lines(dec, coeffs);
  NeutralPartial out;
  out.op = combine(L, epsilon);
  const LabeledOperator& N = out.op;
  const double scale = std::max(1.0, max_abs(N.matrix()));

  // N = Tr_Od N (x) I/d
  {
    const std::string od = "O" + std::to_string(d);
    const LabeledOperator nd = partial_trace(N, {od});
    const LabeledOperator rhs = tensor_product(nd, single(od, Matrix::Identity(d, d) / static_cast<double>(d)));
    out.causal.push_back({"N_Od", max_abs(N.matrix() - rhs.matrix()) / scale});
    LabeledOperator nk = nd;
    for (int k = d; k >= 3; --k) {
      LabeledOperator next;
      const double r = chain_step(nk, "I" + std::to_string(k), "O" + std::to_string(k - 1), d, next);
      out.causal.push_back({"N_I" + std::to_string(k), r / scale});
      nk = next;
    }
    // slot 2 carries the F offset
    LabeledOperator n1, lhs;
    chain_step(nk, "I2", "O1", d, n1, &lhs);
    const LabeledOperator x = dec.reconstruct();
    const long n3 = x.dim();
    const LabeledOperator f(x.registry(),
                            Matrix::Identity(n3, n3) / static_cast<double>(d) - epsilon * x.matrix());
    const LabeledOperator f01 = partial_trace(f, {"O1"});
    const Matrix f_rhs =
        ipow(d, d - 1) * (f.matrix() - kron(f01.matrix(), Matrix::Identity(d, d) / static_cast<double>(d)));
    out.causal.push_back({"N_I2", max_abs(reorder(lhs, {"I0", "I1", "O1"}).matrix() - f_rhs) / scale});
    const LabeledOperator n0 = partial_trace(n1, {"I1"});
    out.causal.push_back(
        {"N_I1", max_abs(n0.matrix() - N.trace() * Matrix::Identity(d0, d0) / static_cast<double>(d0)) / scale});

    // lines 1, 2, 3, 5 against F (x) I/d pairs
    const LabeledOperator fl = L.bulk - cplx(epsilon) * (L.marg + L.alpha1 + L.beta);
    const auto order = nio_labels(d);
    const LabeledOperator fp = assemble({f, identity_pairs(2, d)}, order);
    out.f_residual = max_abs(fl.matrix() - fp.matrix()) / scale;
  }

  out.symmetric_residual = symmetric_condition_residual(N, d, d, d0) / scale;

  // C_j assembled from the grouped coefficients must vanish on the symmetric subspace.
  {
    const auto g = hermitian_basis(d);
    const long din = static_cast<long>(std::llround(ipow(d, d)));
    Matrix y = Matrix::Identity(din, din);
    for (int m = 2; m <= d; ++m) {
      const long rest = static_cast<long>(std::llround(ipow(d, d - m)));
      y += kron(coeffs.group_operator(m), Matrix::Identity(rest, rest));
    }
    std::vector<Space> ins, outs_rest;
    for (int k = 1; k <= d; ++k) ins.push_back({"I" + std::to_string(k), d});
    for (int k = 2; k <= d; ++k) outs_rest.push_back({"O" + std::to_string(k), d});
    const SpaceRegistry rest_reg(outs_rest);
    const long nr = rest_reg.total_dim();
    const auto slot_order = CombStructure{d, d, d0}.slot_labels();
    const auto perms = kernels::slot_permutations(d, d, 1, 1);
    for (int j = 1; j < d * d; ++j) {
      const LabeledOperator cj = assemble({on(ins, y), single("O1", g.g[j]),
                                           LabeledOperator(rest_reg, Matrix::Identity(nr, nr) / ipow(d, d - 1))},
                                          slot_order);
      out.cj_residual = std::max(out.cj_residual, max_abs(kernels::parallel::sandwich_average(cj.matrix(), perms)));
    }
  }

  out.min_eigenvalue = min_eigenvalue(N.hermitian_part());
  return out;
}

// --- lift ---------------------------------------------------------------------

LiftResult lift_neutral(const LabeledOperator& m_ab, const LabeledOperator& projector, const std::string& c_label) {
  const auto& reg = m_ab.registry();
  if (reg.size() < 2) throw DimensionError("lift_neutral: M_AB needs spaces A and B");
  const Space a_space = reg[0];
  const int d0 = a_space.dim;
  std::vector<Space> b_spaces(reg.spaces().begin() + 1, reg.spaces().end());
  const SpaceRegistry b_reg(b_spaces);
  if (!(projector.registry() == b_reg)) throw LabelError("lift_neutral: projector must act on the B spaces of M_AB");
  const long db = b_reg.total_dim();
  const long dac = static_cast<long>(d0) * d0;
  const Matrix& P = projector.matrix();
  const Matrix Pp = Matrix::Identity(db, db) - P;
  const auto h = hermitian_basis(d0);
  const int nh = d0 * d0;
  const double scale = std::max(1.0, max_abs(m_ab.matrix()));

  LiftResult out;

  // M_k = Tr_A[(h_k (x) I) M_AB] / d0
  std::vector<Matrix> mk(nh, Matrix::Zero(db, db));
  for (int k = 0; k < nh; ++k)
    for (int a = 0; a < d0; ++a)
      for (int b = 0; b < d0; ++b)
        if (h.g[k](b, a) != 0.0) mk[k] += h.g[k](b, a) * m_ab.matrix().block(a * db, b * db, db, db);
  for (auto& m : mk) m /= static_cast<double>(d0);

  for (int k = 1; k < nh; ++k) out.precondition_residual = std::max(out.precondition_residual, max_abs(P * mk[k] * P));
  out.precondition_residual /= scale;
  if (out.precondition_residual > 1e-9)
    throw ConstructionError("lift_neutral: M_AB violates the symmetric-subspace condition", out.precondition_residual);

  // <a_k| (h_k' (x) I) |phi+> = d0^2 delta_kk', solved for the minimum-norm a_k.
  Vector phi = Vector::Zero(dac);
  for (int i = 0; i < d0; ++i) phi(i * d0 + i) = 1.0 / std::sqrt(static_cast<double>(d0));
  Matrix v(dac, nh);
  for (int k = 0; k < nh; ++k) v.col(k) = kron(h.g[k], Matrix::Identity(d0, d0)) * phi;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(v.adjoint());
  const Matrix jid = static_cast<double>(d0) * phi * phi.adjoint();
  for (int k = 0; k < nh; ++k) {
    Vector rhs = Vector::Zero(nh);
    rhs(k) = static_cast<double>(nh);
    const Vector ak = cod.solve(rhs);
    out.a_vectors.push_back(ak);
    out.a_ops.push_back(phi * ak.adjoint());
    Matrix alpha = Matrix::Zero(nh, nh);
    for (int i = 0; i < nh; ++i)
      for (int j = 1; j < nh; ++j) alpha(i, j) = trace_product(kron(h.g[i], h.g[j]), out.a_ops.back()) / static_cast<double>(nh);
    out.alpha.push_back(alpha);
  }

  // Assembled on (A, C, B).
  const Matrix id_ac = Matrix::Identity(dac, dac);
  Matrix m = kron(jid, P * mk[0] * P) + kron(id_ac, Pp * mk[0] * Pp) / static_cast<double>(d0);
  for (int i = 1; i < nh; ++i)
    m += kron(kron(h.g[i], Matrix::Identity(d0, d0)), Pp * mk[i] * Pp) / static_cast<double>(d0);
  for (int k = 0; k < nh; ++k) {
    const Matrix off = P * mk[k] * Pp;
    m += (kron(out.a_ops[k], off) + kron(out.a_ops[k].adjoint(), off.adjoint())) / static_cast<double>(d0);
  }
  // Pp M_k P equals (P M_k Pp)^dagger because M_k is Hermitian for Hermitian M_AB.
  std::vector<Space> acb{a_space, {c_label, d0}};
  for (const auto& s : b_spaces) acb.push_back(s);
  const SpaceRegistry acb_reg(acb);
  std::vector<std::string> abc_order{a_space.label};
  for (const auto& s : b_spaces) abc_order.push_back(s.label);
  abc_order.push_back(c_label);

  const Matrix psup_acb = kron(phi * phi.adjoint(), P) + kron(id_ac, Pp);
  out.m_abc = reorder(LabeledOperator(acb_reg, m), std::span<const std::string>(abc_order));
  out.psup = reorder(LabeledOperator(acb_reg, psup_acb), std::span<const std::string>(abc_order));

  out.trace_c_residual = max_abs(partial_trace(out.m_abc, {c_label}).matrix() - m_ab.matrix()) / scale;
  out.support_residual = max_abs(psup_acb * m * psup_acb - m) / scale;

  // Pi M Pi against J_id/d0 (x) Tr_AC(Pi M Pi), on (A, C, B).
  const Matrix pib = kron(id_ac, P);
  const Matrix sym = pib * m * pib;
  Matrix tr_ac = Matrix::Zero(db, db);
  for (long x = 0; x < dac; ++x) tr_ac += sym.block(x * db, x * db, db, db);
  out.neutralization_residual = max_abs(sym - kron(jid / static_cast<double>(d0), tr_ac)) / scale;

  // Restriction to the range of Psup.
  Eigen::SelfAdjointEigenSolver<Matrix> es(P);
  std::vector<long> in_pi, in_perp;
  for (long k = 0; k < db; ++k) (es.eigenvalues()(k) > 0.5 ? in_pi : in_perp).push_back(k);
  Matrix basis(dac * db, static_cast<long>(in_pi.size() + dac * in_perp.size()));
  long col = 0;
  for (long k : in_pi) basis.col(col++) = kron(phi, es.eigenvectors().col(k));
  for (long x = 0; x < dac; ++x)
    for (long k : in_perp) {
      Vector e = Vector::Zero(dac);
      e(x) = 1.0;
      basis.col(col++) = kron(e, es.eigenvectors().col(k));
    }
  const Matrix restricted = basis.adjoint() * m * basis;
  out.min_eigenvalue_support = min_eigenvalue(Matrix(0.5 * (restricted + restricted.adjoint())));
  return out;
}

// --- epsilon ------------------------------------------------------------------

EpsilonSearch choose_epsilon(const OneSlotComb& s, int d, double margin, double resolution) {
  if (margin <= 0.0) throw std::invalid_argument("choose_epsilon: margin must be positive");
  const OneSlotDecomposition dec = decompose_one_slot(s);
  if (dec.d != d) throw DimensionError("choose_epsilon: slot dimension mismatch");
  const AntisymCoefficients coeffs = antisym_coefficients(d);
  const PartialLines L = partial_lines(dec, coeffs);
  const LabeledOperator pi = symmetric_projector(d, d);
  const double scale = ipow(d, d);

  EpsilonSearch out;
  auto feasible = [&](double eps, double& lp, double& ls) {
    ++out.evaluations;
    const LabeledOperator n = combine(L, eps);
    lp = min_eigenvalue(n.hermitian_part());
    if (lp < margin) {
      ls = std::numeric_limits<double>::quiet_NaN();
      return false;
    }
    const LiftResult lift = lift_neutral(cplx(scale) * n, pi);
    ls = lift.min_eigenvalue_support / scale;
    return ls >= margin;
  };

  double lp = 0.0, ls = 0.0;
  if (feasible(1.0, lp, ls)) {
    out.epsilon = 1.0;
    out.min_eigenvalue_partial = lp;
    out.min_eigenvalue_support = ls;
    return out;
  }
  double lo = 0.0, hi = 1.0;
  while (hi - lo > resolution) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid, lp, ls))
      lo = mid;
    else
      hi = mid;
  }
  if (lo < 1e-6) throw ConstructionError("no feasible epsilon above 1e-6", lo);
  feasible(lo, lp, ls);
  out.epsilon = lo;
  out.min_eigenvalue_partial = lp;
  out.min_eigenvalue_support = ls;
  return out;
}

// --- pipeline -----------------------------------------------------------------

SodCertificate certify_pair(const Comb& s, const Comb& n, TargetKind target, int samples, std::uint64_t seed) {
  SodCertificate cert;
  std::vector<Matrix> us;
  for (int k = 0; k < samples; ++k) us.push_back(haar_unitary(s.structure().d, derive_seed(seed, k)));
  const SuccessAction succ = check_success_action(s, target_function(target), us, 1.0);
  const NeutralizationResult draw = check_neutralization_direct(n, us, 1.0);
  for (int k = 0; k < samples; ++k)
    cert.samples.push_back({us[k], succ.p[k], draw.q[k], succ.residuals[k], draw.residuals[k]});
  cert.p_spread = succ.spread;
  cert.max_success_residual = succ.max_residual;
  cert.max_draw_residual = draw.max_residual;

  const PairReport pair = validate_probabilistic_pair(s, n, 1e-8);
  cert.causal = pair.sum.residuals;
  cert.min_eigenvalue_s = pair.min_eigenvalue_s;
  cert.min_eigenvalue_n = pair.min_eigenvalue_n;
  cert.neutralization_residual = check_neutralization_symmetric(n, 1.0).residual;
  if (s.structure().K >= 2) cert.depth_two_residual = check_depth_two(s + n, 1.0).residual;
  return cert;
}

SodBuild build_success_or_draw(const OneSlotComb& s, int d, double epsilon, int samples, std::uint64_t seed) {
  const OneSlotDecomposition dec = decompose_one_slot(s);
  if (dec.gamma_flagged)
    throw ConstructionError("one-slot comb has gamma terms; it does not map unitaries to CPTP maps", dec.max_gamma);
  if (dec.d != d) throw DimensionError("build_success_or_draw: slot dimension mismatch");
  const AntisymCoefficients coeffs = antisym_coefficients(d);
  const double eps = epsilon > 0.0 ? epsilon : choose_epsilon(s, d).epsilon;
  const double scale = ipow(d, d);

  NeutralPartial partial = build_neutral_partial(dec, coeffs, eps);
  LiftResult lift = lift_neutral(cplx(scale) * partial.op, symmetric_projector(d, d));
  const CombStructure st{d, d, dec.d0};
  Comb n(st, cplx(1.0 / scale) * lift.m_abc);
  Comb sp = build_success_part(s, eps, d);
  SodCertificate cert = certify_pair(sp, n, s.target, samples, seed);
  cert.epsilon = eps;
  return SodBuild{std::move(sp), std::move(n), std::move(partial), std::move(lift), std::move(cert)};
}

// --- indefinite causal order variant --------------------------------------------

IcoNeutral build_ico_neutral(const LabeledOperator& n_partial, int K) {
  const auto& reg = n_partial.registry();
  const int d0 = reg[0].dim;
  const int d = reg[1].dim;
  const long db = static_cast<long>(std::llround(ipow(d, 2 * K)));
  if (reg.size() != static_cast<std::size_t>(2 * K + 1) || n_partial.dim() != d0 * db)
    throw DimensionError("build_ico_neutral: operator must live on (I0, K slot pairs)");
  const auto perms = kernels::slot_permutations(K, d, d0, 1);
  IcoNeutral out;
  out.weight = 1.0 / static_cast<double>(perms.size());
  const Matrix avg = kernels::parallel::conjugation_average(n_partial.matrix(), perms);
  out.average = LabeledOperator(reg, avg);

  const Matrix pi = kron(Matrix::Identity(d0, d0), symmetric_projector(K, d).matrix());
  const Matrix pbar = Matrix::Identity(d0 * db, d0 * db) - pi;
  const Matrix sym = pi * avg * pi;
  const auto h = hermitian_basis(d0);
  const int nh = d0 * d0;
  const Matrix jid = static_cast<double>(d0) * max_entangled_projector(d0);
  out.eta = Eigen::MatrixXd::Zero(nh, nh);
  for (int i = 0; i < nh; ++i)
    for (int j = 0; j < nh; ++j) out.eta(i, j) = trace_product(kron(h.g[i], h.g[j]), jid).real() / d0;

  Matrix n = kron(avg, Matrix::Identity(d0, d0) / static_cast<double>(d0));
  for (int i = 1; i < nh; ++i) {
    const Matrix hi_sym = kron(h.g[i], Matrix::Identity(db, db)) * sym;
    for (int j = 1; j < nh; ++j)
      if (out.eta(i, j) != 0.0) n += (out.eta(i, j) / d0) * kron(hi_sym, h.g[j]);
  }
  std::vector<Space> full = reg.spaces();
  full.push_back({"O0", d0});
  out.n = LabeledOperator(SpaceRegistry(full), n);
  const double scale = std::max(1.0, max_abs(n));

  // (1/d0) J_id (x) Tr_I0(Pi avg Pi) + Pbar avg Pbar (x) I/d0, assembled on (I0, O0, B).
  Matrix tr0 = Matrix::Zero(db, db);
  for (int a = 0; a < d0; ++a) tr0 += sym.block(a * db, a * db, db, db);
  const Matrix sym_part = kron(jid / static_cast<double>(d0), tr0);
  const Matrix perp_part = kron(pbar * avg * pbar, Matrix::Identity(d0, d0) / static_cast<double>(d0));
  std::vector<Space> iob{reg[0], {"O0", d0}};
  for (std::size_t k = 1; k < reg.size(); ++k) iob.push_back(reg[k]);
  const auto order = out.n.registry().labels();
  const Matrix sym_part_n =
      reorder(LabeledOperator(SpaceRegistry(iob), sym_part), std::span<const std::string>(order)).matrix();
  out.form_residual = max_abs(n - sym_part_n - perp_part) / scale;
  out.min_eigenvalue_sym_part = min_eigenvalue(Matrix(0.5 * (sym_part + sym_part.adjoint())));
  out.min_eigenvalue_perp_part = min_eigenvalue(Matrix(0.5 * (perp_part + perp_part.adjoint())));
  out.min_eigenvalue = min_eigenvalue(Matrix(0.5 * (n + n.adjoint())));

  // Pi N Pi against J_id/d0 (x) Tr_{I0 O0}(Pi N Pi), on (I0, O0, B).
  const LabeledOperator n_iob = reorder(out.n, std::span<const std::string>(SpaceRegistry(iob).labels()));
  const Matrix pib = kron(Matrix::Identity(d0 * d0, d0 * d0), symmetric_projector(K, d).matrix());
  const Matrix pnp = pib * n_iob.matrix() * pib;
  Matrix tr_io = Matrix::Zero(db, db);
  for (long x = 0; x < d0 * d0; ++x) tr_io += pnp.block(x * db, x * db, db, db);
  out.neutralization_residual = max_abs(pnp - kron(jid / static_cast<double>(d0), tr_io)) / scale;

  out.marginal_residual = max_abs(partial_trace(out.n, {"O0"}).matrix() - avg) / scale;
  out.block_residual = max_abs(pi * avg * pbar) / scale;
  return out;
}

}  // namespace sod
