#include "sod/channels.hpp"

#include <cmath>
#include <random>

#include <Eigen/QR>
#include <Eigen/SVD>

namespace sod {

Channel::Channel(LabeledOperator choi) : choi_(std::move(choi)) {
  if (choi_.registry().size() != 2)
    throw DimensionError("channel Choi operator must live on (input, output)");
}

Vector vec_unitary(const Matrix& u) {
  const long d = u.rows();
  Vector v(d * d);
  for (long i = 0; i < d; ++i)
    for (long k = 0; k < d; ++k) v(i * d + k) = u(k, i);
  return v;
}

Channel choi_of_unitary(const Matrix& u, const std::string& in, const std::string& out) {
  if (u.rows() != u.cols()) throw DimensionError("unitary must be square");
  const long d = u.rows();
  if ((u.adjoint() * u - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-10)
    throw std::invalid_argument("choi_of_unitary: input is not unitary");
  const Vector v = vec_unitary(u);
  const int di = static_cast<int>(d);
  return Channel(LabeledOperator(SpaceRegistry{{in, di}, {out, di}}, v * v.adjoint()));
}

ChannelReport validate_channel(const Channel& c, double tol) {
  ChannelReport r;
  const auto& j = c.choi();
  r.min_eigenvalue = min_eigenvalue(j.hermitian_part());
  r.cp = r.min_eigenvalue >= -tol;
  const Matrix tr_out = partial_trace(j, {c.out_label()}).matrix();
  const Matrix tr_in = partial_trace(j, {c.in_label()}).matrix();
  r.tp_residual = (tr_out - Matrix::Identity(c.d_in(), c.d_in())).norm();
  r.unital_residual = (tr_in - Matrix::Identity(c.d_out(), c.d_out())).norm();
  r.tp = r.tp_residual <= tol;
  r.unital = r.unital_residual <= tol;
  return r;
}

Matrix apply_channel(const Channel& c, const Matrix& rho) {
  if (rho.rows() != c.d_in() || rho.cols() != c.d_in())
    throw DimensionError("apply_channel: state dimension does not match channel input");
  LabeledOperator lifted(c.choi().registry(),
                         c.choi().matrix() * kron(rho.transpose(), Matrix::Identity(c.d_out(), c.d_out())));
  return partial_trace(lifted, {c.in_label()}).matrix();
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t counter) {
  // SplitMix64 finalizer over root + golden-ratio-spaced counter.
  std::uint64_t z = root + 0x9E3779B97F4A7C15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Matrix haar_unitary(int d, std::uint64_t seed) {
  if (d < 1) throw DimensionError("haar_unitary: d must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) z(i, j) = cplx(normal(rng), normal(rng));
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < d; ++k) {
    const cplx diag = r(k, k);
    const double mag = std::abs(diag);
    q.col(k) *= mag > 0.0 ? diag / mag : cplx(1.0);
  }
  return q;
}

namespace {

Vector kron_power_vec(const Matrix& u, int K) {
  // J_U^{(x)K} = |v><v| with v = |U>>^{(x)K}; row-major vec(|v><v|) = v (x) conj(v).
  const Vector one = vec_unitary(u);
  Vector v = one;
  for (int k = 1; k < K; ++k) {
    Vector next(v.size() * one.size());
    for (long a = 0; a < v.size(); ++a) next.segment(a * one.size(), one.size()) = v(a) * one;
    v = next;
  }
  Vector out(v.size() * v.size());
  for (long a = 0; a < v.size(); ++a) out.segment(a * v.size(), v.size()) = v(a) * v.conjugate();
  return out;
}

int numerical_rank(const Matrix& cols, double rank_tol) {
  if (cols.cols() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(cols);
  const auto& s = svd.singularValues();
  const double top = s(0);
  if (top == 0.0) return 0;
  int r = 0;
  for (long k = 0; k < s.size(); ++k)
    if (s(k) > rank_tol * top) ++r;
  return r;
}

}  // namespace

SpanResult span_dimension(int d, int K, std::uint64_t seed, double rank_tol, int cap, int patience) {
  if (d < 2 || K < 1) throw DimensionError("span_dimension: need d >= 2 and K >= 1");
  SpanResult out;
  Matrix basis;
  int stale = 0;
  for (int n = 0; n < cap; ++n) {
    const Matrix u = haar_unitary(d, derive_seed(seed, static_cast<std::uint64_t>(n)));
    const Vector v = kron_power_vec(u, K);
    Matrix trial(v.size(), basis.cols() + 1);
    if (basis.cols() > 0) trial.leftCols(basis.cols()) = basis;
    trial.col(basis.cols()) = v;
    ++out.samples_drawn;
    if (numerical_rank(trial, rank_tol) > out.dim) {
      basis = std::move(trial);
      out.dim = static_cast<int>(basis.cols());
      out.spanning_unitaries.push_back(u);
      stale = 0;
    } else if (++stale >= patience) {
      out.converged = true;
      break;
    }
  }
  return out;
}

TwirlResult twirl_Q(int d, int samples, std::uint64_t seed) {
  if (d < 2 || samples < 1) throw DimensionError("twirl_Q: need d >= 2 and samples >= 1");
  const long d2 = static_cast<long>(d) * d;
  const Matrix p2 = max_entangled_projector(d);
  const Matrix p1 = Matrix::Identity(d2, d2) - p2;
  // Built on factor order (1,3,2,4), then moved to (1,2,3,4).
  SpaceRegistry order1324{{"1", d}, {"3", d}, {"2", d}, {"4", d}};
  LabeledOperator q1324(order1324, kron(p1, p1) / static_cast<double>(d2 - 1) + kron(p2, p2));

  TwirlResult result;
  result.exact = reorder(q1324, {"1", "2", "3", "4"});
  result.samples = samples;

  const SpaceRegistry reg = result.exact.registry();
  Matrix acc = Matrix::Zero(d2 * d2, d2 * d2);
  for (int n = 0; n < samples; ++n) {
    const Matrix u = haar_unitary(d, derive_seed(seed, static_cast<std::uint64_t>(n)));
    const Vector a = vec_unitary(u.conjugate()) / std::sqrt(static_cast<double>(d));
    const Vector b = vec_unitary(u) / std::sqrt(static_cast<double>(d));
    Vector ab(d2 * d2);
    for (long i = 0; i < d2; ++i) ab.segment(i * d2, d2) = a(i) * b;
    acc.noalias() += ab * ab.adjoint();
  }
  result.estimate = LabeledOperator(reg, acc / static_cast<double>(samples));
  result.deviation = (result.estimate.matrix() - result.exact.matrix() / static_cast<double>(d2)).norm();
  return result;
}

}  // namespace sod
