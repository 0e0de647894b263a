#pragma once

// Universal success-or-draw construction: from a one-slot probabilistic comb
// on unitaries to a d-slot pair (S, N) whose draw branch N outputs a multiple
// of the identity channel on every U^{(x)d}.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sod/combs.hpp"
#include "sod/tensor.hpp"

namespace sod {

class ConstructionError : public std::runtime_error {
 public:
  ConstructionError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

enum class TargetKind { identity, inverse, transpose, conjugate };

std::string to_string(TargetKind t);
TargetKind target_from_string(const std::string& s);
Matrix apply_target(TargetKind t, const Matrix& u);
TargetMap target_function(TargetKind t);

// Probabilistic one-slot comb on (I0, I1, O1, O0) with nominal action
// U -> p_nominal f(U).
struct OneSlotComb {
  LabeledOperator choi;
  TargetKind target = TargetKind::identity;
  double p_nominal = 1.0;

  int d0() const { return choi.registry().dim_of("I0"); }
  int d() const { return choi.registry().dim_of("I1"); }
  Comb as_comb() const;
};

// Expansion of X = Tr_O0 S_stgs on (I0, I1, O1) in the product basis
// h_i (x) g_j (x) g_k with coefficients c_ijk = Tr[(h_i (x) g_j (x) g_k) X] / (d0 d^2).
struct OneSlotDecomposition {
  int d0 = 0;
  int d = 0;
  // I/d0 (x) Tr_I0 X on (I0, I1, O1).
  LabeledOperator marginal;
  // alpha(i-1, j-1) = c_ij0, beta(i-1, k-1) = c_i0k, i, j, k >= 1.
  Eigen::MatrixXd alpha;
  Eigen::MatrixXd beta;
  // gamma[((i-1) * (d^2-1) + (j-1)) * (d^2-1) + (k-1)] = c_ijk.
  std::vector<double> gamma;
  double max_gamma = 0.0;
  bool gamma_flagged = false;
  // Largest |c_i00|, i >= 1; these terms have no slot in the four-term form.
  double max_unplaced = 0.0;
  double reconstruction_residual = 0.0;
  // Largest imaginary part met while extracting real coefficients.
  double max_imag = 0.0;

  // marginal + alpha, beta, gamma terms on (I0, I1, O1).
  LabeledOperator reconstruct() const;
};

// Throws ConstructionError when the four-term reconstruction misses X by more than 1e-8.
OneSlotDecomposition decompose_one_slot(const OneSlotComb& s, double gamma_tol = 1e-9);

// d^d A_d = I^{(x)d} + sum_m sum_k a_{m,k} g_{k_1} (x) ... (x) g_{k_m} (x) I^{(x)(d-m)},
// grouped by the position m of the last traceless factor (k_m != 0).
struct AntisymCoefficients {
  struct Term {
    std::vector<int> k;
    double a = 0.0;
  };
  int d = 0;
  // groups[m] for m = 0..d; groups[0] holds the constant term, groups[1] stays empty.
  std::vector<std::vector<Term>> groups;
  double constant = 0.0;
  // Largest |coefficient| of g_i (x) I (x) ... (x) I, i >= 1, before grouping.
  double max_single_factor = 0.0;
  double reconstruction_residual = 0.0;

  // sum of group m placed on m factors, i.e. Y_m on (A1..Am).
  Matrix group_operator(int m) const;
};

AntisymCoefficients antisym_coefficients(int d);

// S = eps S_stgs (x) I^{IkOk}/d for k = 2..K, in comb order.
Comb build_success_part(const OneSlotComb& s, double epsilon, int K);

struct NeutralPartial {
  // Operator on (I0, I1, O1, ..., Id, Od).
  LabeledOperator op;
  std::vector<Residual> causal;
  double symmetric_residual = 0.0;
  double cj_residual = 0.0;
  double f_residual = 0.0;
  double min_eigenvalue = 0.0;

  double max_causal() const;
};

NeutralPartial build_neutral_partial(const OneSlotDecomposition& dec, const AntisymCoefficients& coeffs,
                                     double epsilon);

struct LiftResult {
  // On (A, B..., C) with C labelled `c_label`.
  LabeledOperator m_abc;
  // A_k = |phi+><a_k| on (A, C).
  std::vector<Matrix> a_ops;
  std::vector<Vector> a_vectors;
  // alpha[k](i, j) for j >= 1.
  std::vector<Matrix> alpha;
  LabeledOperator psup;
  double min_eigenvalue_support = 0.0;
  double trace_c_residual = 0.0;
  double support_residual = 0.0;
  double neutralization_residual = 0.0;
  double precondition_residual = 0.0;
};

// M_AB lives on (A, B...), A its first space; `projector` acts on B.
LiftResult lift_neutral(const LabeledOperator& m_ab, const LabeledOperator& projector,
                        const std::string& c_label = "O0");

struct EpsilonSearch {
  double epsilon = 0.0;
  double min_eigenvalue_partial = 0.0;
  double min_eigenvalue_support = 0.0;
  int evaluations = 0;
};

EpsilonSearch choose_epsilon(const OneSlotComb& s, int d, double margin = 1e-10, double resolution = 1e-4);

struct SampleRecord {
  Matrix u;
  double p = 0.0;
  double q = 0.0;
  double residual_success = 0.0;
  double residual_draw = 0.0;
};

struct SodCertificate {
  double epsilon = 0.0;
  std::vector<SampleRecord> samples;
  std::vector<Residual> causal;
  double min_eigenvalue_s = 0.0;
  double min_eigenvalue_n = 0.0;
  double neutralization_residual = 0.0;
  double depth_two_residual = 0.0;
  double p_spread = 0.0;
  double max_success_residual = 0.0;
  double max_draw_residual = 0.0;
};

struct SodBuild {
  Comb s;
  Comb n;
  NeutralPartial partial;
  LiftResult lift;
  SodCertificate certificate;
};

// epsilon <= 0 selects it with choose_epsilon.
SodBuild build_success_or_draw(const OneSlotComb& s, int d, double epsilon = 0.0, int samples = 100,
                               std::uint64_t seed = 1);

// Fills the certificate of an existing pair.
SodCertificate certify_pair(const Comb& s, const Comb& n, TargetKind target, int samples,
                            std::uint64_t seed);

struct IcoNeutral {
  LabeledOperator n;
  Eigen::MatrixXd eta;
  LabeledOperator average;
  double weight = 0.0;
  double min_eigenvalue = 0.0;
  double min_eigenvalue_sym_part = 0.0;
  double min_eigenvalue_perp_part = 0.0;
  double form_residual = 0.0;
  double neutralization_residual = 0.0;
  double marginal_residual = 0.0;
  double block_residual = 0.0;
};

// N_partial on (I0, slots); the result lives on (I0, slots, O0).
IcoNeutral build_ico_neutral(const LabeledOperator& n_partial, int K);

}  // namespace sod
