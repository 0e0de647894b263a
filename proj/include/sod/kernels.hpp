#pragma once

// Index-permutation and contraction kernels shared by the operator algebra,
// the comb checks, and the SDP solver. Every kernel has a straightforward
// serial reference in `serial` and an OpenMP version in `parallel`; the two
// produce identical results and the tests hold them to that.

#include <span>
#include <vector>

#include "sod/tensor.hpp"

namespace sod::kernels {

// Flat offsets for a subset of subsystems. For a full index i with digits
// x_1..x_n, i = kept[u] + rest[t] where u enumerates the digits of the
// selected subsystems and t the remaining ones, both row-major.
struct SplitIndex {
  std::vector<long> kept;
  std::vector<long> rest;
};

// `selected` lists subsystem positions (any order, no duplicates).
SplitIndex split_index(std::span<const int> dims, std::span<const int> selected);

// old_index[new_i] for the layout obtained by listing subsystems in `order`.
std::vector<long> permuted_index(std::span<const int> dims, std::span<const int> order);

// Index permutations for all simultaneous permutations of K (input, output)
// slot pairs of dimension d, with untouched spaces of dimension `lead` before
// and `trail` after the slots. Row i of P_sigma A reads row perms[s][i] of A.
std::vector<std::vector<long>> slot_permutations(int K, int d, int lead = 1, int trail = 1);

namespace serial {

Matrix partial_trace(const Matrix& a, std::span<const int> dims, std::span<const int> traced);
Matrix permute_subsystems(const Matrix& a, std::span<const int> dims, std::span<const int> order);
Matrix partial_transpose(const Matrix& a, std::span<const int> dims, std::span<const int> selected);
// (1/n^2) sum_{s,t} P_s A P_t^dagger for index permutations `perms`
// (each perms[s][new_i] = old_i).
Matrix sandwich_average(const Matrix& a, const std::vector<std::vector<long>>& perms);
// (1/n) sum_s P_s A P_s^dagger.
Matrix conjugation_average(const Matrix& a, const std::vector<std::vector<long>>& perms);
// out[(a,b),(a',b')] = sum_{r,r'} C[(a r b),(a' r' b')] X[r,r'] with outer
// dimensions (da, db) and inner dimension X.rows().
Matrix contract_middle(const Matrix& c, const Matrix& x, long da, long db);
// Clips negative eigenvalues of each Hermitian block in place; returns the
// smallest eigenvalue seen before clipping.
double project_psd(std::span<Matrix> blocks);

}  // namespace serial

namespace parallel {

Matrix partial_trace(const Matrix& a, std::span<const int> dims, std::span<const int> traced);
Matrix permute_subsystems(const Matrix& a, std::span<const int> dims, std::span<const int> order);
Matrix partial_transpose(const Matrix& a, std::span<const int> dims, std::span<const int> selected);
Matrix sandwich_average(const Matrix& a, const std::vector<std::vector<long>>& perms);
Matrix conjugation_average(const Matrix& a, const std::vector<std::vector<long>>& perms);
Matrix contract_middle(const Matrix& c, const Matrix& x, long da, long db);
double project_psd(std::span<Matrix> blocks);
// contract_middle for many inner operators at once.
std::vector<Matrix> contract_middle_batch(const Matrix& c, std::span<const Matrix> xs, long da,
                                          long db);

}  // namespace parallel

}  // namespace sod::kernels
