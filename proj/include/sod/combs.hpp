#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sod/channels.hpp"
#include "sod/tensor.hpp"

namespace sod {

// Slot layout I0, I1, O1, ..., IK, OK, O0. Slot spaces have dimension d, the
// open ports I0 and O0 dimension d0.
struct CombStructure {
  int K = 1;
  int d = 2;
  int d0 = 2;

  std::vector<std::string> labels() const;
  SpaceRegistry registry() const;
  // I1, O1, ..., IK, OK.
  std::vector<std::string> slot_labels() const;
  long slot_dim() const;
  bool operator==(const CombStructure&) const = default;
};

class Comb {
 public:
  Comb() = default;
  // Reorders `choi` into comb order; its spaces must match the structure.
  Comb(CombStructure structure, const LabeledOperator& choi);

  const CombStructure& structure() const { return structure_; }
  const LabeledOperator& choi() const { return choi_; }

 private:
  CombStructure structure_;
  LabeledOperator choi_;
};

Comb operator+(const Comb& a, const Comb& b);
Comb operator*(double s, const Comb& a);

struct Residual {
  std::string name;
  double value = 0.0;
};

struct CombReport {
  bool valid = false;
  double min_eigenvalue = 0.0;
  std::vector<Residual> residuals;
  // Name of the first residual above tolerance, or "psd" when positivity fails.
  std::string failing;

  double max_residual() const;
};

// Positivity, normalization Tr C = d0 d^K and the causal chain
// Tr_O0 C = C(K) (x) I/d, Tr_Ik C(k) = C(k-1) (x) I/d, Tr_I1 C(1) = Tr C I/d0,
// where C(k) is the partial trace of C down to (I0, I1, ..., Ik).
CombReport validate_deterministic_comb(const Comb& c, double tol);

// Left-minus-right operators of the causal chain, named Tr_O0, Tr_IK..Tr_I2, Tr_I1.
// All vanish for a comb; they are linear in the Choi operator.
std::vector<std::pair<std::string, Matrix>> causal_residual_operators(const Comb& c);

struct PairReport {
  bool valid = false;
  double min_eigenvalue_s = 0.0;
  double min_eigenvalue_n = 0.0;
  CombReport sum;
};

PairReport validate_probabilistic_pair(const Comb& s, const Comb& n, double tol);

// Channel on (I0, O0) induced by plugging `channels` into the slots.
Channel apply_comb(const Comb& c, const std::vector<Channel>& channels);
// Same as apply_comb with J_U in every slot.
Channel apply_comb_unitary(const Comb& c, const Matrix& u);

struct NeutralizationResult {
  bool ok = false;
  std::vector<double> q;
  std::vector<double> residuals;
  double max_residual = 0.0;
};

// Proportionality to J_id: ||M - phi+ M phi+|| <= tol max(1, ||M||).
double identity_proportionality_residual(const Matrix& m, int d0);

NeutralizationResult check_neutralization_direct(const Comb& n, const std::vector<Matrix>& unitaries,
                                                 double tol);

struct SymmetricNeutralization {
  bool ok = false;
  double residual = 0.0;
  // Tr_IO(Pi N Pi) on (I0, O0).
  LabeledOperator reduced;
};

SymmetricNeutralization check_neutralization_symmetric(const Comb& n, double tol);

using TargetMap = std::function<Matrix(const Matrix&)>;

struct SuccessAction {
  bool ok = false;
  std::vector<double> p;
  // ||M - p_U J_f(U)|| / ||J_f(U)||.
  std::vector<double> residuals;
  double max_residual = 0.0;
  double spread = 0.0;
};

SuccessAction check_success_action(const Comb& s, const TargetMap& target,
                                   const std::vector<Matrix>& unitaries, double tol);

struct DepthTwoResult {
  bool ok = false;
  double residual = 0.0;
};

// Tr_O0 C = Tr_{O2..OK O0} C (x) I/d^{K-1}; requires K >= 2.
DepthTwoResult check_depth_two(const Comb& c, double tol);

// I^{I0} (x) I^{I1}/d (x) I^{O1} (x) ... (x) I^{IK}/d (x) I^{OK} (x) I^{O0}/d0.
Comb example_deterministic_comb(const CombStructure& s);
// Maximally entangled wires I0->I1, O1->I2, ..., OK->O0 (needs d0 = d).
Comb identity_wiring_comb(const CombStructure& s);
// J_id on (I0, O0) with I/d on every slot pair; ignores its inputs.
Comb discard_and_identity_comb(const CombStructure& s);

}  // namespace sod
