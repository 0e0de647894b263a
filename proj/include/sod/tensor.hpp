#pragma once

#include <complex>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sod {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

class LabelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Space {
  std::string label;
  int dim = 1;

  bool operator==(const Space&) const = default;
};

// Ordered list of named tensor factors. Index layout is row-major with the
// last-listed space varying fastest.
class SpaceRegistry {
 public:
  SpaceRegistry() = default;
  SpaceRegistry(std::initializer_list<Space> spaces);
  explicit SpaceRegistry(std::vector<Space> spaces);

  const std::vector<Space>& spaces() const { return spaces_; }
  std::size_t size() const { return spaces_.size(); }
  bool empty() const { return spaces_.empty(); }
  const Space& operator[](std::size_t i) const { return spaces_[i]; }

  long total_dim() const;
  std::vector<int> dims() const;
  std::vector<std::string> labels() const;

  bool contains(const std::string& label) const;
  // Throws LabelError when the label is absent.
  std::size_t position(const std::string& label) const;
  int dim_of(const std::string& label) const;

  // Spaces of this registry restricted to `labels`, keeping registry order.
  SpaceRegistry subset(std::span<const std::string> labels) const;
  SpaceRegistry without(std::span<const std::string> labels) const;
  SpaceRegistry concat(const SpaceRegistry& other) const;
  SpaceRegistry relabeled(std::span<const std::string> new_labels) const;

  bool operator==(const SpaceRegistry&) const = default;

 private:
  std::vector<Space> spaces_;
};

// Dense complex operator on an ordered tensor product of labelled spaces.
class LabeledOperator {
 public:
  LabeledOperator() = default;
  LabeledOperator(SpaceRegistry registry, Matrix entries);

  static LabeledOperator identity(const SpaceRegistry& registry);
  static LabeledOperator zero(const SpaceRegistry& registry);

  const SpaceRegistry& registry() const { return registry_; }
  const Matrix& matrix() const { return entries_; }
  Matrix& matrix() { return entries_; }
  long dim() const { return entries_.rows(); }

  cplx trace() const { return entries_.trace(); }
  double norm() const { return entries_.norm(); }
  double hermiticity_residual() const;
  LabeledOperator adjoint() const;
  // (A + A^dagger) / 2
  LabeledOperator hermitian_part() const;

  LabeledOperator& operator+=(const LabeledOperator& rhs);
  LabeledOperator& operator-=(const LabeledOperator& rhs);
  LabeledOperator& operator*=(cplx s);

 private:
  SpaceRegistry registry_;
  Matrix entries_;
};

LabeledOperator operator+(LabeledOperator a, const LabeledOperator& b);
LabeledOperator operator-(LabeledOperator a, const LabeledOperator& b);
LabeledOperator operator*(cplx s, LabeledOperator a);
LabeledOperator operator*(LabeledOperator a, cplx s);
// Operator product; registries must agree.
LabeledOperator operator*(const LabeledOperator& a, const LabeledOperator& b);

LabeledOperator tensor_product(const LabeledOperator& a, const LabeledOperator& b);
LabeledOperator tensor_product(std::span<const LabeledOperator> factors);

LabeledOperator partial_trace(const LabeledOperator& a, std::span<const std::string> labels);
LabeledOperator partial_trace(const LabeledOperator& a, std::initializer_list<std::string> labels);

LabeledOperator partial_transpose(const LabeledOperator& a, std::span<const std::string> labels);
LabeledOperator partial_transpose(const LabeledOperator& a,
                                  std::initializer_list<std::string> labels);

// Permutes tensor factors so that the result is laid out in `order`.
LabeledOperator reorder(const LabeledOperator& a, std::span<const std::string> order);
LabeledOperator reorder(const LabeledOperator& a, std::initializer_list<std::string> order);

// Tensors `a` with identities on the spaces of `target` it lacks, then lays the
// result out in target order. Spaces of `a` must all appear in `target`.
LabeledOperator embed(const LabeledOperator& a, const SpaceRegistry& target);

// Unitary P with P|x_1 ... x_K> = |y> where y[sigma[k]] = x[k]; factor k is
// moved to position sigma[k]. All spaces must share one dimension.
LabeledOperator permutation_operator(const SpaceRegistry& registry, std::span<const int> sigma);

int permutation_sign(std::span<const int> sigma);
std::vector<std::vector<int>> all_permutations(int n);

// Labels "I1","O1",...,"IK","OK".
SpaceRegistry slot_registry(int K, int d);

// Normalized projector (1/K!) sum_sigma P^I_sigma (x) P^O_sigma on K slot pairs.
LabeledOperator symmetric_projector(int K, int d);
LabeledOperator symmetric_projector(const SpaceRegistry& slots);

struct HermBasis {
  int dim = 0;
  // g[0] = identity, the rest traceless, Tr(g_i g_j) = dim * delta_ij.
  std::vector<Matrix> g;
};

HermBasis hermitian_basis(int d);

// Rank-one projector onto the totally antisymmetric state of d qudits of
// dimension d. Spaces are named by `labels` (defaults to "A1".."Ad").
LabeledOperator antisymmetric_state(int d);
LabeledOperator antisymmetric_state(int d, std::span<const std::string> labels);

// |phi+><phi+| with |phi+> = sum_i |ii> / sqrt(d).
Matrix max_entangled_projector(int d);

Matrix kron(const Matrix& a, const Matrix& b);

double min_eigenvalue(const LabeledOperator& a);
double min_eigenvalue(const Matrix& a);
bool is_psd(const LabeledOperator& a, double tol);

inline constexpr double kHermitianTol = 1e-10;

}  // namespace sod
