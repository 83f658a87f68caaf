#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "core/dual.hpp"

namespace dppp {

// Row-major square matrix over a scalar that may be a Dual.
template <class T>
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n) : n_(n), a_(n * n, T(0.0)) {}
  static SquareMatrix from_eigen(const Eigen::MatrixXd& m);

  std::size_t size() const noexcept { return n_; }
  T& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

  // Principal submatrix on the index list.
  SquareMatrix principal(std::span<const std::size_t> idx) const;

 private:
  std::size_t n_ = 0;
  std::vector<T> a_;
};

// Size limits of the exact evaluation paths; configurable per call.
struct AlphaDetLimits {
  std::size_t cycle_sum = 12;
  std::size_t ryser = 30;
  std::size_t partitions = 10;
  std::size_t colouring = 16;
};

// det_alpha A = sum over permutations of alpha^{n - cycles} prod a_{i, s(i)}.
// Dispatch: alpha=-1 LU, alpha=1 Ryser, alpha=0 diagonal product,
// alpha=-1/m or 1/m colouring expansion, anything else the cycle sum.
double alpha_determinant(const Eigen::MatrixXd& a, double alpha, const AlphaDetLimits& limits = {});
template <class T>
T alpha_determinant(const SquareMatrix<T>& a, double alpha, const AlphaDetLimits& limits = {});

// Reference path: Heap-order permutation enumeration, union-find cycle count.
template <class T>
T alpha_determinant_cycle_sum(const SquareMatrix<T>& a, double alpha, std::size_t limit = 12);

// det_{base/m}(A) = m^{-n} sum over m-colourings of prod det_base(A[colour class]),
// base in {-1, 1}.
template <class T>
T alpha_determinant_colouring(const SquareMatrix<T>& a, int base, std::int64_t m, std::size_t limit = 16);

template <class T>
T determinant_lu(SquareMatrix<T> a);

template <class T>
T permanent_ryser(const SquareMatrix<T>& a, std::size_t limit = 30);

double permanent_ryser(const Eigen::MatrixXd& a, std::size_t limit = 30);

// Determinant expansion over set partitions:
//   per A = sum_sigma (-1)^{n + iota(sigma)} iota(sigma)! prod_tau det A[tau].
double permanent_via_partitions(const Eigen::MatrixXd& a, std::size_t limit = 10);

std::uint64_t bell_number(unsigned n);

// Number of cycles of a permutation given in one-line notation.
std::size_t cycle_count(std::span<const std::size_t> perm);

// A set partition of {0..n-1} in canonical (restricted growth string) form.
struct SetPartition {
  std::vector<std::vector<std::size_t>> blocks;
  std::size_t block_count() const noexcept { return blocks.size(); }
};

// Visits every set partition of {0..n-1}; labels[i] is the block of i,
// labels form a restricted growth string. Returns the number visited.
std::uint64_t for_each_set_partition(std::size_t n,
                                     const std::function<void(std::span<const std::size_t> labels,
                                                              std::size_t block_count)>& visit);

SetPartition partition_from_labels(std::span<const std::size_t> labels, std::size_t block_count);

// For f over subsets of an n-set (indexed by bitmask, f[0] = 1) returns
// g_k[S] = sum over ordered k-tuples of disjoint subsets covering S of prod f,
// for k = 0..kmax. g_0[S] = [S empty].
template <class T>
std::vector<std::vector<T>> subset_convolution_powers(std::span<const T> f, std::size_t n, std::size_t kmax);

}  // namespace dppp
