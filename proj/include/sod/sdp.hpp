#pragma once

// Dense SDP layer: Hermitian PSD blocks plus one free scalar p, affine
// equality constraints, objective max w * p. Solved by an over-relaxed
// ADMM splitting between the affine set and the PSD cone.

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "sod/tensor.hpp"

namespace sod {

// Isometric real coordinates of a Hermitian matrix: diagonal entries, then
// sqrt(2) Re and sqrt(2) Im of the strict upper triangle, so that
// <hvec(X), hvec(Y)> = Tr(X Y).
Eigen::VectorXd hvec(const Matrix& x);
Matrix hmat(const Eigen::Ref<const Eigen::VectorXd>& v, int n);

struct SdpBlock {
  std::string name;
  int dim = 0;
};

// Isotypic decomposition of one block under a unitary symmetry of the problem.
// Invariant matrices are exactly sum_c V_c (X_c (x) I_{dim_c}) V_c^dagger with
// X_c of size multiplicity x multiplicity; column a * dim + i of V_c is vector i
// of copy a.
struct IsotypicComponent {
  int multiplicity = 0;
  int dim = 0;
  Matrix basis;
};
using BlockSymmetry = std::vector<IsotypicComponent>;

// Decomposition of (C^2)^{(x)n} under V -> (V or conj(V) per factor), V in SU(2).
// conjugated[k] selects conj(V) on factor k (factor 0 is the most significant).
BlockSymmetry su2_symmetry(const std::vector<bool>& conjugated);

// Hermitian-preserving linear map applied to one block.
struct LinearTerm {
  int block = 0;
  std::function<Matrix(const Matrix&)> map;
};

class SdpProblem {
 public:
  int add_block(const std::string& name, int dim);

  // sum_t map_t(X_{block_t}) + p * p_coeff = rhs, one real row per Hermitian
  // coordinate of the m x m output. An empty p_coeff means p does not appear.
  void add_equality(const std::string& name, const std::vector<LinearTerm>& terms, const Matrix& p_coeff,
                    const Matrix& rhs);
  // Declares that the feasible set and objective are invariant under the group
  // behind `sym` acting on `block`. The solver then runs in invariant
  // coordinates; primal residuals and the dual bound are still evaluated on the
  // full problem, so a wrong declaration cannot produce a false certificate.
  void set_symmetry(int block, BlockSymmetry sym);
  const BlockSymmetry* symmetry(int block) const;

  // Raw row over the variable vector.
  void add_row(const std::vector<Eigen::Triplet<double>>& entries, double rhs);

  const std::vector<SdpBlock>& blocks() const { return blocks_; }
  long num_variables() const { return offset_p() + 1; }
  long offset(int block) const;
  long offset_p() const;
  long num_rows() const { return static_cast<long>(rhs_.size()); }
  Eigen::SparseMatrix<double> constraint_matrix() const;
  Eigen::VectorXd rhs() const { return Eigen::Map<const Eigen::VectorXd>(rhs_.data(), num_rows()); }

  // Objective weight on p; 0 gives a feasibility problem.
  double objective_weight = 1.0;

  // Row ranges per add_equality call.
  struct Group {
    std::string name;
    long first = 0;
    long count = 0;
  };
  const std::vector<Group>& groups() const { return groups_; }

 private:
  std::vector<SdpBlock> blocks_;
  std::vector<Eigen::Triplet<double>> entries_;
  std::vector<double> rhs_;
  std::vector<Group> groups_;
  std::vector<BlockSymmetry> symmetry_;
};

enum class SdpStatus { optimal, max_iter, infeasible_suspected };
std::string to_string(SdpStatus s);

struct SdpOptions {
  double tol = 1e-6;
  long max_iter = 200000;
  double relaxation = 1.5;
  double rho = 1.0;
  bool adaptive_rho = true;
  // Column scaling of the free variable p inside the solver.
  double p_scale = 1.0;
  // Upper bound on the summed block traces of every feasible point; when positive
  // the solver also reports a dual upper bound on the optimal p.
  double trace_bound = 0.0;
  // Convergence is tested every `check_every` iterations.
  int check_every = 10;
  // Type-II Anderson acceleration of the (z, u) fixed-point map; 0 disables it.
  int anderson_memory = 10;
  // Called at every convergence check with (iteration, p, primal, dual, rho).
  std::function<void(long, double, double, double, double)> monitor;
};

struct SdpSolution {
  std::vector<Matrix> blocks;
  double p = 0.0;
  // max |A z - b| at the reported (PSD) iterate.
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  long iterations = 0;
  SdpStatus status = SdpStatus::max_iter;
  // Largest negative eigenvalue clipped from the reported blocks (0 when PSD).
  double min_eigenvalue = 0.0;
  double rho = 0.0;
  long rank = 0;
  // Certified upper bound on the optimal p (NaN unless SdpOptions::trace_bound is set).
  double p_upper = std::numeric_limits<double>::quiet_NaN();
};

SdpSolution solve_sdp(const SdpProblem& prob, const SdpOptions& opt = {});

}  // namespace sod
