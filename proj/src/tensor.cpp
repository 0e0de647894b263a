#include "sod/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <Eigen/Eigenvalues>

#include "sod/kernels.hpp"

namespace sod {

// --- SpaceRegistry -----------------------------------------------------------

SpaceRegistry::SpaceRegistry(std::initializer_list<Space> spaces)
    : SpaceRegistry(std::vector<Space>(spaces)) {}

SpaceRegistry::SpaceRegistry(std::vector<Space> spaces) : spaces_(std::move(spaces)) {
  std::set<std::string> seen;
  for (const auto& s : spaces_) {
    if (s.dim < 1) throw DimensionError("space '" + s.label + "' has non-positive dimension");
    if (!seen.insert(s.label).second) throw LabelError("duplicate label '" + s.label + "'");
  }
}

long SpaceRegistry::total_dim() const {
  long n = 1;
  for (const auto& s : spaces_) n *= s.dim;
  return n;
}

std::vector<int> SpaceRegistry::dims() const {
  std::vector<int> out;
  out.reserve(spaces_.size());
  for (const auto& s : spaces_) out.push_back(s.dim);
  return out;
}

std::vector<std::string> SpaceRegistry::labels() const {
  std::vector<std::string> out;
  out.reserve(spaces_.size());
  for (const auto& s : spaces_) out.push_back(s.label);
  return out;
}

bool SpaceRegistry::contains(const std::string& label) const {
  return std::any_of(spaces_.begin(), spaces_.end(),
                     [&](const Space& s) { return s.label == label; });
}

std::size_t SpaceRegistry::position(const std::string& label) const {
  for (std::size_t k = 0; k < spaces_.size(); ++k)
    if (spaces_[k].label == label) return k;
  throw LabelError("unknown label '" + label + "'");
}

int SpaceRegistry::dim_of(const std::string& label) const { return spaces_[position(label)].dim; }

SpaceRegistry SpaceRegistry::subset(std::span<const std::string> labels) const {
  for (const auto& l : labels) position(l);
  std::vector<Space> out;
  for (const auto& s : spaces_)
    if (std::find(labels.begin(), labels.end(), s.label) != labels.end()) out.push_back(s);
  return SpaceRegistry(std::move(out));
}

SpaceRegistry SpaceRegistry::without(std::span<const std::string> labels) const {
  for (const auto& l : labels) position(l);
  std::vector<Space> out;
  for (const auto& s : spaces_)
    if (std::find(labels.begin(), labels.end(), s.label) == labels.end()) out.push_back(s);
  return SpaceRegistry(std::move(out));
}

SpaceRegistry SpaceRegistry::concat(const SpaceRegistry& other) const {
  std::vector<Space> out = spaces_;
  for (const auto& s : other.spaces_) {
    if (contains(s.label)) throw LabelError("label collision on '" + s.label + "'");
    out.push_back(s);
  }
  return SpaceRegistry(std::move(out));
}

SpaceRegistry SpaceRegistry::relabeled(std::span<const std::string> new_labels) const {
  if (new_labels.size() != spaces_.size()) throw LabelError("relabel: label count mismatch");
  std::vector<Space> out = spaces_;
  for (std::size_t k = 0; k < out.size(); ++k) out[k].label = new_labels[k];
  return SpaceRegistry(std::move(out));
}

// --- LabeledOperator ---------------------------------------------------------

LabeledOperator::LabeledOperator(SpaceRegistry registry, Matrix entries)
    : registry_(std::move(registry)), entries_(std::move(entries)) {
  const long n = registry_.total_dim();
  if (entries_.rows() != n || entries_.cols() != n)
    throw DimensionError("matrix shape " + std::to_string(entries_.rows()) + "x" +
                         std::to_string(entries_.cols()) + " does not match registry dimension " +
                         std::to_string(n));
}

LabeledOperator LabeledOperator::identity(const SpaceRegistry& registry) {
  const long n = registry.total_dim();
  return {registry, Matrix::Identity(n, n)};
}

LabeledOperator LabeledOperator::zero(const SpaceRegistry& registry) {
  const long n = registry.total_dim();
  return {registry, Matrix::Zero(n, n)};
}

double LabeledOperator::hermiticity_residual() const {
  return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
}

LabeledOperator LabeledOperator::adjoint() const { return {registry_, entries_.adjoint()}; }

LabeledOperator LabeledOperator::hermitian_part() const {
  return {registry_, 0.5 * (entries_ + entries_.adjoint())};
}

LabeledOperator& LabeledOperator::operator+=(const LabeledOperator& rhs) {
  if (!(registry_ == rhs.registry_)) throw LabelError("operator sum over different registries");
  entries_ += rhs.entries_;
  return *this;
}

LabeledOperator& LabeledOperator::operator-=(const LabeledOperator& rhs) {
  if (!(registry_ == rhs.registry_)) throw LabelError("operator difference over different registries");
  entries_ -= rhs.entries_;
  return *this;
}

LabeledOperator& LabeledOperator::operator*=(cplx s) {
  entries_ *= s;
  return *this;
}

LabeledOperator operator+(LabeledOperator a, const LabeledOperator& b) { return a += b; }
LabeledOperator operator-(LabeledOperator a, const LabeledOperator& b) { return a -= b; }
LabeledOperator operator*(cplx s, LabeledOperator a) { return a *= s; }
LabeledOperator operator*(LabeledOperator a, cplx s) { return a *= s; }

LabeledOperator operator*(const LabeledOperator& a, const LabeledOperator& b) {
  if (!(a.registry() == b.registry())) throw LabelError("operator product over different registries");
  return {a.registry(), a.matrix() * b.matrix()};
}

// --- algebra -----------------------------------------------------------------

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (long j = 0; j < a.cols(); ++j)
    for (long i = 0; i < a.rows(); ++i)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

LabeledOperator tensor_product(const LabeledOperator& a, const LabeledOperator& b) {
  return {a.registry().concat(b.registry()), kron(a.matrix(), b.matrix())};
}

LabeledOperator tensor_product(std::span<const LabeledOperator> factors) {
  if (factors.empty()) return {SpaceRegistry{}, Matrix::Identity(1, 1)};
  LabeledOperator out = factors.front();
  for (std::size_t k = 1; k < factors.size(); ++k) out = tensor_product(out, factors[k]);
  return out;
}

namespace {

std::vector<int> positions_of(const SpaceRegistry& reg, std::span<const std::string> labels) {
  std::vector<int> pos;
  pos.reserve(labels.size());
  for (const auto& l : labels) pos.push_back(static_cast<int>(reg.position(l)));
  std::vector<int> sorted = pos;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw LabelError("repeated label in selection");
  return pos;
}

}  // namespace

LabeledOperator partial_trace(const LabeledOperator& a, std::span<const std::string> labels) {
  const auto pos = positions_of(a.registry(), labels);
  const auto dims = a.registry().dims();
  return {a.registry().without(labels), kernels::parallel::partial_trace(a.matrix(), dims, pos)};
}

LabeledOperator partial_trace(const LabeledOperator& a, std::initializer_list<std::string> labels) {
  std::vector<std::string> v(labels);
  return partial_trace(a, std::span<const std::string>(v));
}

LabeledOperator partial_transpose(const LabeledOperator& a, std::span<const std::string> labels) {
  const auto pos = positions_of(a.registry(), labels);
  const auto dims = a.registry().dims();
  return {a.registry(), kernels::parallel::partial_transpose(a.matrix(), dims, pos)};
}

LabeledOperator partial_transpose(const LabeledOperator& a,
                                  std::initializer_list<std::string> labels) {
  std::vector<std::string> v(labels);
  return partial_transpose(a, std::span<const std::string>(v));
}

LabeledOperator reorder(const LabeledOperator& a, std::span<const std::string> order) {
  if (order.size() != a.registry().size()) throw LabelError("reorder: label count mismatch");
  const auto pos = positions_of(a.registry(), order);
  std::vector<Space> spaces;
  for (int p : pos) spaces.push_back(a.registry()[p]);
  bool identity_order = true;
  for (std::size_t k = 0; k < pos.size(); ++k) identity_order &= pos[k] == static_cast<int>(k);
  if (identity_order) return a;
  const auto dims = a.registry().dims();
  return {SpaceRegistry(std::move(spaces)), kernels::parallel::permute_subsystems(a.matrix(), dims, pos)};
}

LabeledOperator reorder(const LabeledOperator& a, std::initializer_list<std::string> order) {
  std::vector<std::string> v(order);
  return reorder(a, std::span<const std::string>(v));
}

LabeledOperator embed(const LabeledOperator& a, const SpaceRegistry& target) {
  std::vector<Space> missing;
  for (const auto& s : target.spaces()) {
    if (a.registry().contains(s.label)) {
      if (a.registry().dim_of(s.label) != s.dim)
        throw DimensionError("embed: dimension mismatch on '" + s.label + "'");
    } else {
      missing.push_back(s);
    }
  }
  for (const auto& s : a.registry().spaces())
    if (!target.contains(s.label)) throw LabelError("embed: '" + s.label + "' not in target");
  LabeledOperator full = missing.empty()
                             ? a
                             : tensor_product(a, LabeledOperator::identity(SpaceRegistry(missing)));
  const auto order = target.labels();
  return reorder(full, std::span<const std::string>(order));
}

// --- permutations ------------------------------------------------------------

int permutation_sign(std::span<const int> sigma) {
  std::vector<bool> seen(sigma.size(), false);
  int sign = 1;
  for (std::size_t start = 0; start < sigma.size(); ++start) {
    if (seen[start]) continue;
    std::size_t len = 0;
    for (std::size_t k = start; !seen[k]; k = static_cast<std::size_t>(sigma[k])) {
      seen[k] = true;
      ++len;
    }
    if (len % 2 == 0) sign = -sign;
  }
  return sign;
}

std::vector<std::vector<int>> all_permutations(int n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

namespace {

void check_permutation(std::span<const int> sigma) {
  std::vector<int> s(sigma.begin(), sigma.end());
  std::sort(s.begin(), s.end());
  for (std::size_t k = 0; k < s.size(); ++k)
    if (s[k] != static_cast<int>(k)) throw std::invalid_argument("not a permutation");
}

Matrix permutation_matrix(const std::vector<int>& dims, std::span<const int> sigma) {
  // Layout whose position p holds old factor sigma^{-1}(p).
  std::vector<int> inverse(sigma.size());
  for (std::size_t k = 0; k < sigma.size(); ++k) inverse[sigma[k]] = static_cast<int>(k);
  const auto idx = kernels::permuted_index(dims, inverse);
  const long n = static_cast<long>(idx.size());
  Matrix p = Matrix::Zero(n, n);
  for (long i = 0; i < n; ++i) p(i, idx[i]) = 1.0;
  return p;
}

}  // namespace

LabeledOperator permutation_operator(const SpaceRegistry& registry, std::span<const int> sigma) {
  if (sigma.size() != registry.size()) throw DimensionError("permutation size mismatch");
  check_permutation(sigma);
  const auto dims = registry.dims();
  for (int d : dims)
    if (d != dims.front()) throw DimensionError("permutation_operator requires equal dimensions");
  return {registry, permutation_matrix(dims, sigma)};
}

SpaceRegistry slot_registry(int K, int d) {
  std::vector<Space> spaces;
  for (int k = 1; k <= K; ++k) {
    spaces.push_back({"I" + std::to_string(k), d});
    spaces.push_back({"O" + std::to_string(k), d});
  }
  return SpaceRegistry(std::move(spaces));
}

LabeledOperator symmetric_projector(int K, int d) { return symmetric_projector(slot_registry(K, d)); }

LabeledOperator symmetric_projector(const SpaceRegistry& slots) {
  if (slots.size() % 2 != 0) throw DimensionError("slot registry must hold (input, output) pairs");
  const int K = static_cast<int>(slots.size() / 2);
  std::vector<int> pair_dims;
  for (int k = 0; k < K; ++k) pair_dims.push_back(slots[2 * k].dim * slots[2 * k + 1].dim);
  for (int pd : pair_dims)
    if (pd != pair_dims.front()) throw DimensionError("symmetric_projector requires equal slots");
  const long n = slots.total_dim();
  Matrix pi = Matrix::Zero(n, n);
  const auto perms = all_permutations(K);
  for (const auto& s : perms) pi += permutation_matrix(pair_dims, s);
  pi /= static_cast<double>(perms.size());
  return {slots, pi};
}

// --- bases and states --------------------------------------------------------

HermBasis hermitian_basis(int d) {
  if (d < 1) throw DimensionError("hermitian_basis: d must be positive");
  HermBasis basis;
  basis.dim = d;
  basis.g.push_back(Matrix::Identity(d, d));
  const double scale = std::sqrt(d / 2.0);
  const cplx I(0.0, 1.0);
  for (int k = 1; k < d; ++k) {
    for (int j = 0; j < k; ++j) {
      Matrix sym = Matrix::Zero(d, d);
      sym(j, k) = sym(k, j) = 1.0;
      basis.g.push_back(scale * sym);
      Matrix anti = Matrix::Zero(d, d);
      anti(j, k) = -I;
      anti(k, j) = I;
      basis.g.push_back(scale * anti);
    }
    Matrix diag = Matrix::Zero(d, d);
    const double c = std::sqrt(2.0 / (k * (k + 1.0)));
    for (int j = 0; j < k; ++j) diag(j, j) = c;
    diag(k, k) = -c * k;
    basis.g.push_back(scale * diag);
  }
  return basis;
}

LabeledOperator antisymmetric_state(int d) {
  std::vector<std::string> labels;
  for (int k = 1; k <= d; ++k) labels.push_back("A" + std::to_string(k));
  return antisymmetric_state(d, labels);
}

LabeledOperator antisymmetric_state(int d, std::span<const std::string> labels) {
  if (d < 2) throw DimensionError("antisymmetric_state: d must be at least 2");
  if (static_cast<int>(labels.size()) != d) throw LabelError("antisymmetric_state: need d labels");
  std::vector<Space> spaces;
  for (const auto& l : labels) spaces.push_back({l, d});
  SpaceRegistry reg(std::move(spaces));
  const long n = reg.total_dim();
  Vector psi = Vector::Zero(n);
  const auto perms = all_permutations(d);
  const double amp = 1.0 / std::sqrt(static_cast<double>(perms.size()));
  for (const auto& s : perms) {
    long idx = 0;
    for (int k = 0; k < d; ++k) idx = idx * d + s[k];
    psi(idx) = amp * permutation_sign(s);
  }
  return {reg, psi * psi.adjoint()};
}

Matrix max_entangled_projector(int d) {
  Vector v = Vector::Zero(static_cast<long>(d) * d);
  for (int i = 0; i < d; ++i) v(i * d + i) = 1.0 / std::sqrt(static_cast<double>(d));
  return v * v.adjoint();
}

// --- spectra -----------------------------------------------------------------

double min_eigenvalue(const Matrix& a) {
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol * scale)
    throw std::domain_error("min_eigenvalue: operator is not Hermitian");
  // real symmetric input takes the cheaper real solver
  if (a.imag().cwiseAbs().maxCoeff() == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.real(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double min_eigenvalue(const LabeledOperator& a) { return min_eigenvalue(a.matrix()); }

bool is_psd(const LabeledOperator& a, double tol) { return min_eigenvalue(a) >= -tol; }

}  // namespace sod
