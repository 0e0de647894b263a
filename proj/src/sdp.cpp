#include "sod/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <utility>

#include <Eigen/Eigenvalues>
#include <Eigen/IterativeLinearSolvers>

namespace sod {

namespace {
const double kSqrt2 = std::sqrt(2.0);
// Coefficients below this are dropped when rows are assembled.
const double kDropTol = 1e-14;
}  // namespace

Eigen::VectorXd hvec(const Matrix& x) {
  const long n = x.rows();
  Eigen::VectorXd v(n * n);
  long k = 0;
  for (long i = 0; i < n; ++i) v(k++) = x(i, i).real();
  for (long i = 0; i < n; ++i)
    for (long j = i + 1; j < n; ++j) {
      v(k++) = kSqrt2 * x(i, j).real();
      v(k++) = kSqrt2 * x(i, j).imag();
    }
  return v;
}

Matrix hmat(const Eigen::Ref<const Eigen::VectorXd>& v, int n) {
  if (v.size() != static_cast<long>(n) * n) throw DimensionError("hmat: coordinate count is not n^2");
  Matrix x(n, n);
  long k = 0;
  for (int i = 0; i < n; ++i) x(i, i) = v(k++);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const cplx c(v(k) / kSqrt2, v(k + 1) / kSqrt2);
      k += 2;
      x(i, j) = c;
      x(j, i) = std::conj(c);
    }
  return x;
}

BlockSymmetry su2_symmetry(const std::vector<bool>& conjugated) {
  const int k = static_cast<int>(conjugated.size());
  if (k < 1 || k > 12) throw DimensionError("su2_symmetry: need 1 to 12 qubit factors");
  const long n = 1L << k;
  const cplx i1(0.0, 1.0);
  Matrix sx(2, 2), sy(2, 2), sz(2, 2);
  sx << 0.0, 0.5, 0.5, 0.0;
  sy << 0.0, -0.5 * i1, 0.5 * i1, 0.0;
  sz << 0.5, 0.0, 0.0, -0.5;
  // generator of conj(V) is -conj(G)
  auto total = [&](const Matrix& g) {
    Matrix sum = Matrix::Zero(n, n);
    for (int f = 0; f < k; ++f) {
      const Matrix gf = conjugated[f] ? Matrix(-g.conjugate()) : g;
      Matrix t = Matrix::Identity(1, 1);
      for (int h = 0; h < k; ++h) t = kron(t, h == f ? gf : Matrix::Identity(2, 2));
      sum += t;
    }
    return sum;
  };
  const Matrix lx = total(sx), ly = total(sy), lz = total(sz);
  const Matrix lower = lx - i1 * ly;
  Eigen::SelfAdjointEigenSolver<Matrix> cas(lx * lx + ly * ly + lz * lz);

  BlockSymmetry out;
  long covered = 0;
  for (int twice_j = k % 2; twice_j <= k; twice_j += 2) {
    const double j = 0.5 * twice_j;
    std::vector<long> cols;
    for (long c = 0; c < n; ++c)
      if (std::abs(cas.eigenvalues()(c) - j * (j + 1.0)) < 1e-6) cols.push_back(c);
    if (cols.empty()) continue;
    Matrix e(n, static_cast<long>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) e.col(static_cast<long>(c)) = cas.eigenvectors().col(cols[c]);
    Eigen::SelfAdjointEigenSolver<Matrix> mz(Matrix(e.adjoint() * lz * e));
    std::vector<long> top;
    for (long c = 0; c < mz.eigenvalues().size(); ++c)
      if (std::abs(mz.eigenvalues()(c) - j) < 1e-6) top.push_back(c);
    const int dim = twice_j + 1;
    IsotypicComponent comp;
    comp.multiplicity = static_cast<int>(top.size());
    comp.dim = dim;
    comp.basis.resize(n, static_cast<long>(comp.multiplicity) * dim);
    for (int a = 0; a < comp.multiplicity; ++a) {
      Eigen::VectorXcd v = e * mz.eigenvectors().col(top[a]);
      for (int m = 0; m < dim; ++m) {
        comp.basis.col(static_cast<long>(a) * dim + m) = v;
        if (m + 1 < dim) v = (lower * v).normalized();
      }
    }
    covered += comp.basis.cols();
    out.push_back(std::move(comp));
  }
  if (covered != n) throw std::runtime_error("su2_symmetry: isotypic components do not cover the space");
  Matrix all(n, n);
  long c0 = 0;
  for (const auto& comp : out) {
    all.middleCols(c0, comp.basis.cols()) = comp.basis;
    c0 += comp.basis.cols();
  }
  if ((all.adjoint() * all - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-9)
    throw std::runtime_error("su2_symmetry: symmetry-adapted basis is not orthonormal");
  return out;
}

int SdpProblem::add_block(const std::string& name, int dim) {
  if (!rhs_.empty()) throw std::logic_error("SdpProblem: blocks must be added before constraints");
  if (dim < 1) throw DimensionError("SdpProblem: block dimension must be positive");
  blocks_.push_back({name, dim});
  symmetry_.emplace_back();
  return static_cast<int>(blocks_.size()) - 1;
}

void SdpProblem::set_symmetry(int block, BlockSymmetry sym) {
  if (block < 0 || block >= static_cast<int>(blocks_.size())) throw DimensionError("set_symmetry: unknown block");
  long cols = 0;
  for (const auto& c : sym) {
    if (c.multiplicity < 1 || c.dim < 1 || c.basis.cols() != static_cast<long>(c.multiplicity) * c.dim ||
        c.basis.rows() != blocks_[block].dim)
      throw DimensionError("set_symmetry: component shape does not match the block");
    cols += c.basis.cols();
  }
  if (cols != blocks_[block].dim) throw DimensionError("set_symmetry: components must span the block");
  symmetry_[block] = std::move(sym);
}

const BlockSymmetry* SdpProblem::symmetry(int block) const {
  if (block < 0 || block >= static_cast<int>(blocks_.size())) throw DimensionError("symmetry: unknown block");
  return symmetry_[block].empty() ? nullptr : &symmetry_[block];
}

long SdpProblem::offset(int block) const {
  long off = 0;
  for (int b = 0; b < block; ++b) off += static_cast<long>(blocks_[b].dim) * blocks_[b].dim;
  return off;
}

long SdpProblem::offset_p() const { return offset(static_cast<int>(blocks_.size())); }

void SdpProblem::add_equality(const std::string& name, const std::vector<LinearTerm>& terms, const Matrix& p_coeff,
                              const Matrix& rhs) {
  const long m = rhs.rows();
  if (rhs.cols() != m) throw DimensionError("add_equality: rhs must be square");
  if (p_coeff.size() != 0 && (p_coeff.rows() != m || p_coeff.cols() != m))
    throw DimensionError("add_equality: p coefficient must match rhs");
  const long row0 = num_rows();
  const long nrow = m * m;

  for (const auto& t : terms) {
    if (t.block < 0 || t.block >= static_cast<int>(blocks_.size()))
      throw DimensionError("add_equality: unknown block");
    const int n = blocks_[t.block].dim;
    const long off = offset(t.block);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<long>(n) * n);
    for (long k = 0; k < e.size(); ++k) {
      e(k) = 1.0;
      const Matrix out = t.map(hmat(e, n));
      e(k) = 0.0;
      if (out.rows() != m || out.cols() != m) throw DimensionError("add_equality: map output has the wrong size");
      const Eigen::VectorXd col = hvec(out);
      for (long r = 0; r < nrow; ++r)
        if (std::abs(col(r)) > kDropTol) entries_.emplace_back(row0 + r, off + k, col(r));
    }
  }
  if (p_coeff.size() != 0) {
    const Eigen::VectorXd col = hvec(p_coeff);
    for (long r = 0; r < nrow; ++r)
      if (std::abs(col(r)) > kDropTol) entries_.emplace_back(row0 + r, offset_p(), col(r));
  }
  const Eigen::VectorXd b = hvec(rhs);
  for (long r = 0; r < nrow; ++r) rhs_.push_back(b(r));
  groups_.push_back({name, row0, nrow});
}

void SdpProblem::add_row(const std::vector<Eigen::Triplet<double>>& entries, double rhs) {
  const long row = num_rows();
  for (const auto& t : entries) {
    if (t.col() < 0 || t.col() >= num_variables()) throw DimensionError("add_row: column out of range");
    entries_.emplace_back(row, t.col(), t.value());
  }
  rhs_.push_back(rhs);
  groups_.push_back({"row", row, 1});
}

Eigen::SparseMatrix<double> SdpProblem::constraint_matrix() const {
  Eigen::SparseMatrix<double> a(num_rows(), num_variables());
  a.setFromTriplets(entries_.begin(), entries_.end());
  return a;
}

std::string to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::optimal: return "optimal";
    case SdpStatus::max_iter: return "max-iter";
    case SdpStatus::infeasible_suspected: return "infeasible-suspected";
  }
  return "max-iter";
}

namespace {

// Projection onto {x : A x = b}. The pseudo-inverse is formed from whichever
// Gram matrix is smaller: A A^T (rows) or A^T A (columns).
class AffineProjector {
 public:
  AffineProjector(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b)
      : a_(a), at_(a.transpose()), b_(b), by_rows_(a.rows() <= a.cols()) {
    const Eigen::MatrixXd gram = by_rows_ ? Eigen::MatrixXd(a_ * at_) : Eigen::MatrixXd(at_ * a_);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double top = ev.size() ? ev.maxCoeff() : 0.0;
    std::vector<long> keep;
    for (long k = 0; k < ev.size(); ++k)
      if (ev(k) > 1e-10 * std::max(1.0, top)) keep.push_back(k);
    rank_ = static_cast<long>(keep.size());
    Eigen::MatrixXd vr(gram.rows(), rank_);
    Eigen::VectorXd inv(rank_);
    for (long k = 0; k < rank_; ++k) {
      vr.col(k) = es.eigenvectors().col(keep[k]);
      inv(k) = 1.0 / ev(keep[k]);
    }
    if (by_rows_) {
      w_ = vr * inv.asDiagonal() * vr.transpose();
      x0_ = at_ * (w_ * b_);
    } else {
      // columns of vr span the row space of A
      vr_ = vr;
      pinv_gram_ = vr * inv.asDiagonal() * vr.transpose();
      x0_ = pinv_gram_ * (at_ * b_);
    }
    consistency_ = residual(x0_);
  }

  Eigen::VectorXd operator()(const Eigen::VectorXd& v) const {
    if (by_rows_) return v - at_ * (w_ * (a_ * v - b_));
    return v - vr_ * (vr_.transpose() * v) + x0_;
  }
  // Minimum-norm y with A^T y closest to v, returned with A^T y.
  std::pair<Eigen::VectorXd, Eigen::VectorXd> row_fit(const Eigen::VectorXd& v) const {
    Eigen::VectorXd y = by_rows_ ? Eigen::VectorXd(w_ * (a_ * v)) : Eigen::VectorXd(a_ * (pinv_gram_ * v));
    Eigen::VectorXd aty = at_ * y;
    return {std::move(y), std::move(aty)};
  }
  double residual(const Eigen::VectorXd& v) const {
    return b_.size() ? (a_ * v - b_).cwiseAbs().maxCoeff() : 0.0;
  }
  long rank() const { return rank_; }
  double consistency() const { return consistency_; }

 private:
  Eigen::SparseMatrix<double> a_;
  Eigen::SparseMatrix<double> at_;
  Eigen::VectorXd b_;
  bool by_rows_;
  Eigen::MatrixXd w_;
  Eigen::MatrixXd vr_;
  Eigen::MatrixXd pinv_gram_;
  Eigen::VectorXd x0_;
  long rank_ = 0;
  double consistency_ = 0.0;
};

// Clips negative eigenvalues of every block in place; returns the most negative one seen.
double project_cone(Eigen::VectorXd& v, const std::vector<int>& dims, const std::vector<long>& offsets) {
  std::vector<double> lows(dims.size(), 0.0);
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < static_cast<int>(dims.size()); ++b) {
    const int n = dims[b];
    const long len = static_cast<long>(n) * n;
    const Matrix x = hmat(v.segment(offsets[b], len), n);
    Eigen::SelfAdjointEigenSolver<Matrix> es(x);
    const Eigen::VectorXd ev = es.eigenvalues();
    lows[b] = std::min(0.0, ev.minCoeff());
    if (ev.minCoeff() >= 0.0) continue;
    const Eigen::VectorXd clipped = ev.cwiseMax(0.0);
    const Matrix y = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
    v.segment(offsets[b], len) = hvec(y);
  }
  return lows.empty() ? 0.0 : *std::min_element(lows.begin(), lows.end());
}

// Coordinates the iteration runs in: one PSD cone per unreduced block or per
// isotypic component, then p. `lift` maps them isometrically to the full
// variable vector; the cone of a component with irrep dimension d_c holds
// sqrt(d_c) X_c, and positive scaling commutes with the PSD projection.
struct Reduction {
  std::vector<int> dims;
  std::vector<long> offsets;
  long size = 0;
  long ip = 0;
  bool identity = true;
  Eigen::SparseMatrix<double> lift;
};

Reduction make_reduction(const SdpProblem& prob) {
  Reduction red;
  const auto& blocks = prob.blocks();
  std::vector<Eigen::Triplet<double>> trip;
  for (int b = 0; b < static_cast<int>(blocks.size()); ++b) {
    const long off = prob.offset(b);
    const int n = blocks[b].dim;
    const BlockSymmetry* sym = prob.symmetry(b);
    if (sym == nullptr) {
      red.dims.push_back(n);
      red.offsets.push_back(red.size);
      for (long k = 0; k < static_cast<long>(n) * n; ++k) trip.emplace_back(off + k, red.size + k, 1.0);
      red.size += static_cast<long>(n) * n;
      continue;
    }
    red.identity = false;
    for (const auto& comp : *sym) {
      const int m = comp.multiplicity;
      red.dims.push_back(m);
      red.offsets.push_back(red.size);
      Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<long>(m) * m);
      for (long k = 0; k < e.size(); ++k) {
        e(k) = 1.0;
        const Matrix xc = hmat(e, m) / std::sqrt(static_cast<double>(comp.dim));
        e(k) = 0.0;
        const Matrix full = comp.basis * kron(xc, Matrix::Identity(comp.dim, comp.dim)) * comp.basis.adjoint();
        const Eigen::VectorXd col = hvec(full);
        for (long r = 0; r < col.size(); ++r)
          if (std::abs(col(r)) > kDropTol) trip.emplace_back(off + r, red.size + k, col(r));
      }
      red.size += static_cast<long>(m) * m;
    }
  }
  red.ip = red.size;
  trip.emplace_back(prob.offset_p(), red.size, 1.0);
  ++red.size;
  red.lift.resize(prob.num_variables(), red.size);
  red.lift.setFromTriplets(trip.begin(), trip.end());
  return red;
}

}  // namespace

SdpSolution solve_sdp(const SdpProblem& prob, const SdpOptions& opt) {
  if (opt.tol <= 0.0 || opt.max_iter < 1) throw std::invalid_argument("solve_sdp: bad tolerance or iteration cap");
  if (opt.relaxation <= 0.0 || opt.relaxation >= 2.0)
    throw std::invalid_argument("solve_sdp: relaxation must lie in (0, 2)");
  if (opt.p_scale <= 0.0) throw std::invalid_argument("solve_sdp: p_scale must be positive");
  const auto& blocks = prob.blocks();
  std::vector<int> full_dims;
  std::vector<long> full_offsets;
  for (int b = 0; b < static_cast<int>(blocks.size()); ++b) {
    full_dims.push_back(blocks[b].dim);
    full_offsets.push_back(prob.offset(b));
  }
  const long ip_full = prob.offset_p();

  // the solver works with q = p / p_scale
  Eigen::SparseMatrix<double> a_full = prob.constraint_matrix();
  a_full.col(ip_full) *= opt.p_scale;
  const Reduction red = make_reduction(prob);
  const long nv = red.size;
  const long ip = red.ip;
  const Eigen::VectorXd b = prob.rhs();
  const AffineProjector proj(red.identity ? a_full : Eigen::SparseMatrix<double>(a_full * red.lift), b);
  auto lift = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return red.identity ? v : red.lift * v; };

  SdpSolution sol;
  sol.rank = proj.rank();
  auto finish = [&](const Eigen::VectorXd& zr) {
    const Eigen::VectorXd z = lift(zr);
    for (int b = 0; b < static_cast<int>(blocks.size()); ++b)
      sol.blocks.push_back(hmat(z.segment(full_offsets[b], static_cast<long>(full_dims[b]) * full_dims[b]), full_dims[b]));
    sol.p = opt.p_scale * z(ip_full);
    sol.primal_residual = b.size() ? (a_full * z - b).cwiseAbs().maxCoeff() : 0.0;
    sol.min_eigenvalue = 0.0;
    for (const auto& m : sol.blocks) sol.min_eigenvalue = std::min(sol.min_eigenvalue, min_eigenvalue(m));
  };

  if (proj.consistency() > 1e-8 * std::max(1.0, b.size() ? b.cwiseAbs().maxCoeff() : 0.0)) {
    sol.status = SdpStatus::infeasible_suspected;
    finish(Eigen::VectorXd::Zero(nv));
    return sol;
  }

  Eigen::VectorXd c = Eigen::VectorXd::Zero(nv);
  c(ip) = -prob.objective_weight * opt.p_scale;
  double rho = opt.rho;
  const double alpha = opt.relaxation;

  // One over-relaxed ADMM sweep on the stacked state w = (z, u).
  Eigen::VectorXd x(nv);
  auto sweep = [&](const Eigen::VectorXd& w) {
    const auto z = w.head(nv);
    const auto u = w.tail(nv);
    x = proj(z - u - c / rho);
    Eigen::VectorXd out(2 * nv);
    const Eigen::VectorXd xh = alpha * x + (1.0 - alpha) * z;
    Eigen::VectorXd zn = xh + u;
    project_cone(zn, red.dims, red.offsets);
    out.tail(nv) = u + xh - zn;
    out.head(nv) = std::move(zn);
    return out;
  };

  const int mem = std::max(0, opt.anderson_memory);
  std::deque<Eigen::VectorXd> dg, dt;  // differences of residuals g = w - T(w) and of T(w)
  Eigen::VectorXd w = Eigen::VectorXd::Zero(2 * nv);
  Eigen::VectorXd tw = sweep(w), g = w - tw;
  Eigen::VectorXd z_prev = w.head(nv);

  long it = 1;
  for (; it < opt.max_iter; ++it) {
    Eigen::VectorXd w_next = tw;
    if (mem > 0 && !dg.empty()) {
      const long k = static_cast<long>(dg.size());
      Eigen::MatrixXd y(2 * nv, k);
      for (long j = 0; j < k; ++j) y.col(j) = dg[j];
      Eigen::MatrixXd gram = y.transpose() * y;
      gram.diagonal().array() += 1e-10 * std::max(1e-300, gram.diagonal().maxCoeff());
      const Eigen::VectorXd gamma = gram.ldlt().solve(y.transpose() * g);
      if (gamma.allFinite())
        for (long j = 0; j < k; ++j) w_next -= gamma(j) * dt[j];
    }
    Eigen::VectorXd t_next = sweep(w_next);
    Eigen::VectorXd g_next = w_next - t_next;
    if (mem > 0 && g_next.norm() > g.norm()) {
      // safeguard: fall back to the plain step and restart the history
      w_next = tw;
      t_next = sweep(w_next);
      g_next = w_next - t_next;
      dg.clear();
      dt.clear();
    } else if (mem > 0) {
      dg.push_back(g_next - g);
      dt.push_back(t_next - tw);
      if (static_cast<int>(dg.size()) > mem) {
        dg.pop_front();
        dt.pop_front();
      }
    }
    z_prev = w_next.head(nv);
    w = std::move(w_next);
    tw = std::move(t_next);
    g = std::move(g_next);

    if ((it + 1) % opt.check_every != 0) continue;
    const auto z = tw.head(nv);
    const auto u = tw.tail(nv);
    const double r = (x - z).norm();
    const double s = rho * (z - z_prev).norm();
    sol.dual_residual = s;
    if (opt.monitor) opt.monitor(it + 1, opt.p_scale * z(ip), r, s, rho);
    const double eps_pri = opt.tol * std::max(1.0, std::max(x.norm(), z.norm()));
    const double eps_dual = opt.tol * std::max(1.0, rho * u.norm());
    if (r <= eps_pri && s <= eps_dual) {
      sol.status = SdpStatus::optimal;
      ++it;
      break;
    }
    if (opt.adaptive_rho && (it + 1) % (5 * opt.check_every) == 0) {
      // residual balancing; u is the scaled dual and rescales inversely
      double f = 1.0;
      if (r > 10.0 * s) f = 2.0;
      else if (s > 10.0 * r) f = 0.5;
      if (f != 1.0) {
        rho *= f;
        tw.tail(nv) /= f;
        w = tw;
        tw = sweep(w);
        g = w - tw;
        dg.clear();
        dt.clear();
      }
    }
  }
  const Eigen::VectorXd z = tw.head(nv);
  if (opt.trace_bound > 0.0 && prob.objective_weight > 0.0) {
    // Weak duality with y fitted to the slack estimate -rho u: for feasible x
    // with block traces summing to at most T,
    //   c^T x >= b^T y + min(0, lambda_min(Z)) T + zeta_p q,  Z = c - A^T y.
    // Z is formed on the full problem so the bound does not rely on the symmetry.
    // y is fitted on the full problem: the orthogonal projection onto the row
    // space of A is equivariant, so A^T y stays invariant.
    const Eigen::VectorXd zeta_est = -rho * tw.tail(nv);
    Eigen::VectorXd c_full = Eigen::VectorXd::Zero(prob.num_variables());
    c_full(ip_full) = c(ip);
    Eigen::VectorXd y;
    if (red.identity) {
      y = proj.row_fit(c - zeta_est).first;
    } else {
      const Eigen::SparseMatrix<double> at = a_full.transpose();
      Eigen::LeastSquaresConjugateGradient<Eigen::SparseMatrix<double>> ls(at);
      ls.setTolerance(1e-14);
      ls.setMaxIterations(20 * a_full.rows());
      y = ls.solve(c_full - lift(zeta_est));
    }
    Eigen::VectorXd zeta = c_full - a_full.transpose() * y;
    const double low = std::min(0.0, project_cone(zeta, full_dims, full_offsets));
    const double coef = prob.objective_weight * opt.p_scale + zeta(ip_full);
    if (coef > 0.0) sol.p_upper = -opt.p_scale * (b.dot(y) + low * opt.trace_bound) / coef;
  }
  sol.iterations = it;
  sol.rho = rho;
  finish(z);
  if (sol.status != SdpStatus::optimal && sol.primal_residual > 1e-3) sol.status = SdpStatus::infeasible_suspected;
  return sol;
}

}  // namespace sod
