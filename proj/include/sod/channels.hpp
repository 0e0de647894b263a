#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sod/tensor.hpp"

namespace sod {

// Choi operator of a linear map on (input, output), input listed first.
class Channel {
 public:
  Channel() = default;
  explicit Channel(LabeledOperator choi);

  const LabeledOperator& choi() const { return choi_; }
  int d_in() const { return choi_.registry()[0].dim; }
  int d_out() const { return choi_.registry()[1].dim; }
  const std::string& in_label() const { return choi_.registry()[0].label; }
  const std::string& out_label() const { return choi_.registry()[1].label; }

 private:
  LabeledOperator choi_;
};

// J_U = sum_ij |i><j| (x) U|i><j|U^dagger, i.e. |U>><<U| with the
// column-stacking vector |U>> = sum_i |i> (x) U|i>.
Channel choi_of_unitary(const Matrix& u, const std::string& in = "in",
                        const std::string& out = "out");
// Column-stacked |U>> (unnormalized).
Vector vec_unitary(const Matrix& u);

struct ChannelReport {
  bool cp = false;
  bool tp = false;
  bool unital = false;
  double min_eigenvalue = 0.0;
  double tp_residual = 0.0;
  double unital_residual = 0.0;
};

ChannelReport validate_channel(const Channel& c, double tol);

// Tr_in[J (rho^T (x) I)].
Matrix apply_channel(const Channel& c, const Matrix& rho);

// Haar-random unitary, deterministic in `seed`.
Matrix haar_unitary(int d, std::uint64_t seed);

// Derives an independent stream seed from a root seed and a counter.
std::uint64_t derive_seed(std::uint64_t root, std::uint64_t counter);

struct SpanResult {
  int dim = 0;
  std::vector<Matrix> spanning_unitaries;
  int samples_drawn = 0;
  bool converged = false;
};

// Numerical dimension of span{J_U^{(x)K}} from Haar samples. Sampling stops once
// the rank has not grown for `patience` consecutive draws, or at `cap` draws.
SpanResult span_dimension(int d, int K, std::uint64_t seed, double rank_tol = 1e-8,
                          int cap = 5000, int patience = 10);

struct TwirlResult {
  LabeledOperator exact;
  LabeledOperator estimate;
  int samples = 0;
  double deviation = 0.0;
};

// Exact Q = P1 (x) P1 / (d^2 - 1) + P2 (x) P2 on spaces (1,2,3,4), where |U*>>
// sits on (1,2), |U>> on (3,4), and P1, P2 act on (1,3),(2,4). `estimate` is the
// sample mean of normalized projector pairs and `deviation` its Frobenius
// distance to exact / d^2, the state-normalized twirl.
TwirlResult twirl_Q(int d, int samples, std::uint64_t seed);

}  // namespace sod
