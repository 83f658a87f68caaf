#include "core/alpha_det.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "core/error.hpp"

namespace dppp {

namespace {

void require_size(std::size_t n, std::size_t limit, const char* what) {
  if (n > limit) {
    fail(ErrorCode::SizeLimit, std::string(what) + ": n=" + std::to_string(n) +
                                   " exceeds limit " + std::to_string(limit));
  }
}

bool near_integer(double x, std::int64_t& out) {
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-12 * std::max(1.0, std::abs(x))) return false;
  out = static_cast<std::int64_t>(r);
  return true;
}

template <class T>
T ipow(T base, std::size_t e) {
  T r(1.0);
  for (std::size_t i = 0; i < e; ++i) r *= base;
  return r;
}

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

template <class T>
SquareMatrix<T> SquareMatrix<T>::from_eigen(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) fail(ErrorCode::InvalidArgument, "matrix is not square");
  SquareMatrix<T> out(static_cast<std::size_t>(m.rows()));
  for (std::size_t i = 0; i < out.n_; ++i)
    for (std::size_t j = 0; j < out.n_; ++j) out(i, j) = T(m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  return out;
}

template <class T>
SquareMatrix<T> SquareMatrix<T>::principal(std::span<const std::size_t> idx) const {
  SquareMatrix<T> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) out(i, j) = (*this)(idx[i], idx[j]);
  return out;
}

std::size_t cycle_count(std::span<const std::size_t> perm) {
  UnionFind uf(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) uf.unite(i, perm[i]);
  std::size_t c = 0;
  for (std::size_t i = 0; i < perm.size(); ++i)
    if (uf.find(i) == i) ++c;
  return c;
}

static double determinant_lu_value(SquareMatrix<double> a) {
  const std::size_t n = a.size();
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(a(i, k)) > best) {
        best = std::abs(a(i, k));
        piv = i;
      }
    }
    if (best == 0.0) return 0.0;
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      det = -det;
    }
    det *= a(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      if (f == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return det;
}

template <class T>
T determinant_lu(SquareMatrix<T> a) {
  if constexpr (std::is_same_v<T, double>) {
    return determinant_lu_value(std::move(a));
  } else {
    // d det(A + eB) = sum_k det(A with row k taken from B); valid at singular A.
    const std::size_t n = a.size();
    SquareMatrix<double> v(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) v(i, j) = a(i, j).v;
    Dual out(determinant_lu_value(v), 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      SquareMatrix<double> r = v;
      bool zero = true;
      for (std::size_t j = 0; j < n; ++j) {
        r(k, j) = a(k, j).d;
        zero = zero && r(k, j) == 0.0;
      }
      if (!zero) out.d += determinant_lu_value(std::move(r));
    }
    return out;
  }
}

template <class T>
T permanent_ryser(const SquareMatrix<T>& a, std::size_t limit) {
  const std::size_t n = a.size();
  require_size(n, limit, "permanent");
  if (n == 0) return T(1.0);
  std::vector<T> row_sum(n, T(0.0));
  T total(0.0);
  const std::uint64_t count = std::uint64_t{1} << n;
  std::uint64_t gray_prev = 0;
  for (std::uint64_t k = 1; k < count; ++k) {
    const std::uint64_t gray = k ^ (k >> 1);
    const std::uint64_t diff = gray ^ gray_prev;
    const auto col = static_cast<std::size_t>(__builtin_ctzll(diff));
    const bool added = (gray & diff) != 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (added) row_sum[i] += a(i, col);
      else row_sum[i] -= a(i, col);
    }
    gray_prev = gray;
    T prod(1.0);
    for (std::size_t i = 0; i < n; ++i) prod *= row_sum[i];
    const int size = __builtin_popcountll(gray);
    if (size % 2 == 0) total += prod;
    else total -= prod;
  }
  return (n % 2 == 0) ? total : -total;
}

double permanent_ryser(const Eigen::MatrixXd& a, std::size_t limit) {
  return permanent_ryser(SquareMatrix<double>::from_eigen(a), limit);
}

template <class T>
T alpha_determinant_cycle_sum(const SquareMatrix<T>& a, double alpha, std::size_t limit) {
  const std::size_t n = a.size();
  require_size(n, limit, "cycle-sum alpha-determinant");
  if (n == 0) return T(1.0);
  std::vector<double> alpha_pow(n + 1, 1.0);
  for (std::size_t k = 1; k <= n; ++k) alpha_pow[k] = alpha_pow[k - 1] * alpha;

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> c(n, 0);

  auto term = [&]() {
    T prod(1.0);
    for (std::size_t i = 0; i < n; ++i) prod *= a(i, perm[i]);
    return prod * T(alpha_pow[n - cycle_count(perm)]);
  };

  T total = term();
  std::size_t i = 1;
  while (i < n) {
    if (c[i] < i) {
      if (i % 2 == 0) std::swap(perm[0], perm[i]);
      else std::swap(perm[c[i]], perm[i]);
      total += term();
      ++c[i];
      i = 1;
    } else {
      c[i] = 0;
      ++i;
    }
  }
  return total;
}

template <class T>
std::vector<std::vector<T>> subset_convolution_powers(std::span<const T> f, std::size_t n, std::size_t kmax) {
  const std::size_t full = std::size_t{1} << n;
  if (f.size() != full) fail(ErrorCode::InvalidArgument, "subset table has wrong size");
  std::vector<std::vector<T>> g(kmax + 1, std::vector<T>(full, T(0.0)));
  g[0][0] = T(1.0);
  for (std::size_t k = 1; k <= kmax; ++k) {
    const auto& prev = g[k - 1];
    auto& cur = g[k];
    for (std::size_t s = 0; s < full; ++s) {
      T acc(0.0);
      // Enumerate T subset of S including the empty set and S itself.
      std::size_t t = s;
      while (true) {
        acc += f[t] * prev[s ^ t];
        if (t == 0) break;
        t = (t - 1) & s;
      }
      cur[s] = acc;
    }
  }
  return g;
}

template <class T>
T alpha_determinant_colouring(const SquareMatrix<T>& a, int base, std::int64_t m, std::size_t limit) {
  const std::size_t n = a.size();
  if (base != 1 && base != -1) fail(ErrorCode::InvalidArgument, "colouring base must be +1 or -1");
  if (m < 1) fail(ErrorCode::InvalidArgument, "colouring count must be positive");
  require_size(n, limit, "colouring alpha-determinant");
  const std::size_t full = std::size_t{1} << n;
  std::vector<T> f(full);
  std::vector<std::size_t> idx;
  for (std::size_t s = 0; s < full; ++s) {
    idx.clear();
    for (std::size_t i = 0; i < n; ++i)
      if (s & (std::size_t{1} << i)) idx.push_back(i);
    const auto sub = a.principal(idx);
    f[s] = base == -1 ? determinant_lu(sub) : permanent_ryser(sub, limit);
  }
  const auto g = subset_convolution_powers<T>(f, n, static_cast<std::size_t>(m));
  return g[static_cast<std::size_t>(m)][full - 1] / T(ipow(static_cast<double>(m), n));
}

template <class T>
T alpha_determinant(const SquareMatrix<T>& a, double alpha, const AlphaDetLimits& limits) {
  const std::size_t n = a.size();
  if (n == 0) return T(1.0);
  if (alpha == -1.0) return determinant_lu(a);
  if (alpha == 1.0) return permanent_ryser(a, limits.ryser);
  if (alpha == 0.0) {
    T prod(1.0);
    for (std::size_t i = 0; i < n; ++i) prod *= a(i, i);
    return prod;
  }
  std::int64_t m = 0;
  if (near_integer(1.0 / std::abs(alpha), m) && m >= 2) {
    const int base = alpha < 0 ? -1 : 1;
    return alpha_determinant_colouring(a, base, m, limits.colouring);
  }
  return alpha_determinant_cycle_sum(a, alpha, limits.cycle_sum);
}

double alpha_determinant(const Eigen::MatrixXd& a, double alpha, const AlphaDetLimits& limits) {
  return alpha_determinant(SquareMatrix<double>::from_eigen(a), alpha, limits);
}

std::uint64_t bell_number(unsigned n) {
  if (n > 25) fail(ErrorCode::SizeLimit, "Bell numbers beyond n=25 overflow 64 bits");
  // Bell triangle: each row starts with the last entry of the previous row.
  std::vector<std::uint64_t> row{1};
  for (unsigned i = 0; i < n; ++i) {
    std::vector<std::uint64_t> next{row.back()};
    for (std::uint64_t v : row) next.push_back(next.back() + v);
    row = std::move(next);
  }
  return row.front();
}

std::uint64_t for_each_set_partition(
    std::size_t n, const std::function<void(std::span<const std::size_t>, std::size_t)>& visit) {
  if (n == 0) {
    visit({}, 0);
    return 1;
  }
  std::vector<std::size_t> labels(n, 0);
  std::uint64_t count = 0;
  while (true) {
    std::size_t blocks = 0;
    for (std::size_t v : labels) blocks = std::max(blocks, v + 1);
    visit(labels, blocks);
    ++count;
    // Next restricted growth string: rightmost position that can increase.
    std::size_t i = n - 1;
    while (i > 0) {
      std::size_t prefix_max = 0;
      for (std::size_t j = 0; j < i; ++j) prefix_max = std::max(prefix_max, labels[j] + 1);
      if (labels[i] < prefix_max) break;
      --i;
    }
    if (i == 0) break;
    ++labels[i];
    for (std::size_t j = i + 1; j < n; ++j) labels[j] = 0;
  }
  return count;
}

SetPartition partition_from_labels(std::span<const std::size_t> labels, std::size_t block_count) {
  SetPartition p;
  p.blocks.resize(block_count);
  for (std::size_t i = 0; i < labels.size(); ++i) p.blocks[labels[i]].push_back(i);
  return p;
}

double permanent_via_partitions(const Eigen::MatrixXd& a, std::size_t limit) {
  const auto n = static_cast<std::size_t>(a.rows());
  if (a.rows() != a.cols()) fail(ErrorCode::InvalidArgument, "matrix is not square");
  require_size(n, limit, "partition expansion");
  const auto m = SquareMatrix<double>::from_eigen(a);
  std::vector<double> factorial(n + 1, 1.0);
  for (std::size_t k = 1; k <= n; ++k) factorial[k] = factorial[k - 1] * static_cast<double>(k);
  double total = 0.0;
  std::vector<std::size_t> idx;
  for_each_set_partition(n, [&](std::span<const std::size_t> labels, std::size_t blocks) {
    double prod = 1.0;
    for (std::size_t b = 0; b < blocks && prod != 0.0; ++b) {
      idx.clear();
      for (std::size_t i = 0; i < n; ++i)
        if (labels[i] == b) idx.push_back(i);
      prod *= determinant_lu(m.principal(idx));
    }
    const double sign = ((n + blocks) % 2 == 0) ? 1.0 : -1.0;
    total += sign * factorial[blocks] * prod;
  });
  return total;
}

template class SquareMatrix<double>;
template class SquareMatrix<Dual>;
template double alpha_determinant<double>(const SquareMatrix<double>&, double, const AlphaDetLimits&);
template Dual alpha_determinant<Dual>(const SquareMatrix<Dual>&, double, const AlphaDetLimits&);
template double alpha_determinant_cycle_sum<double>(const SquareMatrix<double>&, double, std::size_t);
template Dual alpha_determinant_cycle_sum<Dual>(const SquareMatrix<Dual>&, double, std::size_t);
template double alpha_determinant_colouring<double>(const SquareMatrix<double>&, int, std::int64_t, std::size_t);
template Dual alpha_determinant_colouring<Dual>(const SquareMatrix<Dual>&, int, std::int64_t, std::size_t);
template double determinant_lu<double>(SquareMatrix<double>);
template Dual determinant_lu<Dual>(SquareMatrix<Dual>);
template double permanent_ryser<double>(const SquareMatrix<double>&, std::size_t);
template Dual permanent_ryser<Dual>(const SquareMatrix<Dual>&, std::size_t);
template std::vector<std::vector<double>> subset_convolution_powers<double>(std::span<const double>, std::size_t, std::size_t);
template std::vector<std::vector<Dual>> subset_convolution_powers<Dual>(std::span<const Dual>, std::size_t, std::size_t);

}  // namespace dppp
