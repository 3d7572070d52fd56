#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "liesim/parallel.hpp"
#include "liesim/rng.hpp"

namespace liesim {

struct TwoSampleResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int n_x = 0;
  int n_y = 0;
  std::string method;
  std::uint64_t seed = 0;
};

struct TwoSampleOptions {
  enum class Method { energy, ks };
  Method method = Method::energy;
  int n_permutations = 1000;
  std::uint64_t seed = 0;
  // Permutation tests in dimension > 1 cache a pooled distance matrix;
  // samples larger than the cap are subsampled (seeded) before testing.
  int cap = 2000;
  int threads = 0;
};

namespace detail {

// Kolmogorov asymptotic tail Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 l^2).
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-8) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

inline double ks_marginal_pvalue(const std::vector<double>& x,
                                 const std::vector<double>& y, double* d_out) {
  std::vector<double> xs = x, ys = y;
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  const double n = static_cast<double>(xs.size());
  const double m = static_cast<double>(ys.size());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < xs.size() && j < ys.size()) {
    const double v = std::min(xs[i], ys[j]);
    while (i < xs.size() && xs[i] <= v) ++i;
    while (j < ys.size() && ys[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n -
                             static_cast<double>(j) / m));
  }
  *d_out = d;
  const double ne = std::sqrt(n * m / (n + m));
  return kolmogorov_q((ne + 0.12 + 0.11 / ne) * d);
}

// Energy statistic T = (nm/(n+m)) (2A - B - C) from within/cross pair sums.
inline double energy_from_sums(double sxx, double syy, double sxy, double n,
                               double m) {
  const double a = sxy / (n * m);
  const double b = 2.0 * sxx / (n * n);
  const double c = 2.0 * syy / (m * m);
  return (n * m / (n + m)) * (2.0 * a - b - c);
}

// 1-D energy machinery: one global sort, then O(N) per labeling using
// prefix counts/sums along the sorted order.
struct Sorted1d {
  std::vector<double> values;      // sorted
  std::vector<std::uint32_t> idx;  // pooled index of each sorted slot
};

inline Sorted1d sort_pooled(const std::vector<double>& pooled) {
  Sorted1d s;
  const std::size_t n = pooled.size();
  s.idx.resize(n);
  std::iota(s.idx.begin(), s.idx.end(), 0U);
  std::sort(s.idx.begin(), s.idx.end(), [&](std::uint32_t a, std::uint32_t b) {
    return pooled[a] < pooled[b];
  });
  s.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.values[i] = pooled[s.idx[i]];
  return s;
}

inline double energy_1d(const Sorted1d& s, const std::vector<std::uint8_t>& is_x,
                        double n, double m) {
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  double cnt_x = 0.0, sum_x = 0.0, cnt_y = 0.0, sum_y = 0.0;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const double v = s.values[i];
    if (is_x[s.idx[i]]) {
      sxx += v * cnt_x - sum_x;
      sxy += v * cnt_y - sum_y;
      cnt_x += 1.0;
      sum_x += v;
    } else {
      syy += v * cnt_y - sum_y;
      sxy += v * cnt_x - sum_x;
      cnt_y += 1.0;
      sum_y += v;
    }
  }
  return energy_from_sums(sxx, syy, sxy, n, m);
}

// Pooled distance matrix (float, full square) for d > 1.
struct DistanceMatrix {
  int n = 0;
  std::vector<float> d;
  float at(int i, int j) const { return d[static_cast<std::size_t>(i) * n + j]; }
};

inline DistanceMatrix build_distances(const Eigen::MatrixXd& pooled,
                                      int threads) {
  DistanceMatrix dm;
  dm.n = static_cast<int>(pooled.rows());
  dm.d.assign(static_cast<std::size_t>(dm.n) * dm.n, 0.0f);
  parallel_for(
      static_cast<std::size_t>(dm.n),
      [&](std::size_t i) {
        for (std::size_t j = i + 1; j < static_cast<std::size_t>(dm.n); ++j) {
          const float v = static_cast<float>(
              (pooled.row(static_cast<int>(i)) - pooled.row(static_cast<int>(j)))
                  .norm());
          dm.d[i * dm.n + j] = v;
          dm.d[j * dm.n + i] = v;
        }
      },
      threads);
  return dm;
}

inline double energy_nd(const DistanceMatrix& dm,
                        const std::vector<std::uint32_t>& x_idx,
                        const std::vector<std::uint32_t>& y_idx) {
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t a = 0; a < x_idx.size(); ++a) {
    const float* row = dm.d.data() + static_cast<std::size_t>(x_idx[a]) * dm.n;
    for (std::size_t b = a + 1; b < x_idx.size(); ++b) sxx += row[x_idx[b]];
    for (std::size_t b = 0; b < y_idx.size(); ++b) sxy += row[y_idx[b]];
  }
  for (std::size_t a = 0; a < y_idx.size(); ++a) {
    const float* row = dm.d.data() + static_cast<std::size_t>(y_idx[a]) * dm.n;
    for (std::size_t b = a + 1; b < y_idx.size(); ++b) syy += row[y_idx[b]];
  }
  return energy_from_sums(sxx, syy, sxy, static_cast<double>(x_idx.size()),
                          static_cast<double>(y_idx.size()));
}

inline Eigen::MatrixXd subsample_rows(const Eigen::MatrixXd& x, int cap,
                                      std::uint64_t seed, std::uint64_t tag) {
  if (x.rows() <= cap) return x;
  std::vector<std::uint32_t> idx(static_cast<std::size_t>(x.rows()));
  std::iota(idx.begin(), idx.end(), 0U);
  RngStream rng(seed, tag, Role::subsample);
  for (int i = 0; i < cap; ++i) {
    const std::size_t j =
        static_cast<std::size_t>(i) +
        static_cast<std::size_t>(rng.next_u64() %
                                 (idx.size() - static_cast<std::size_t>(i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
  }
  Eigen::MatrixXd out(cap, x.cols());
  for (int i = 0; i < cap; ++i) out.row(i) = x.row(idx[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace detail

// Permutation two-sample test. X and Y are row-major sample matrices over the
// same dimension. Energy distance is the default omnibus statistic; the
// p-value is exact-rank over seeded permutations, p = (1 + #{T_perm >=
// T_obs}) / (B + 1), and is deterministic given (seed, sizes, thread-safe by
// construction). Per-marginal Kolmogorov-Smirnov with a Bonferroni correction
// is available both as a method of its own and as the fallback for degenerate
// samples.
inline TwoSampleResult two_sample_test(const Eigen::MatrixXd& x_in,
                                       const Eigen::MatrixXd& y_in,
                                       const TwoSampleOptions& opts = {}) {
  if (x_in.cols() != y_in.cols())
    throw std::invalid_argument("two_sample_test: dimension mismatch");
  if (x_in.rows() < 100 || y_in.rows() < 100)
    throw std::invalid_argument("two_sample_test: need >= 100 samples per side");
  const int d = static_cast<int>(x_in.cols());

  TwoSampleResult res;
  res.seed = opts.seed;

  const bool degenerate = [&] {
    Eigen::MatrixXd pooled(x_in.rows() + y_in.rows(), d);
    pooled << x_in, y_in;
    const Eigen::RowVectorXd mean = pooled.colwise().mean();
    return (pooled.rowwise() - mean).cwiseAbs().maxCoeff() == 0.0;
  }();

  if (opts.method == TwoSampleOptions::Method::ks || degenerate) {
    res.method = degenerate && opts.method != TwoSampleOptions::Method::ks
                     ? "ks(degenerate)"
                     : "ks";
    res.n_x = static_cast<int>(x_in.rows());
    res.n_y = static_cast<int>(y_in.rows());
    double p_min = 1.0;
    double d_max = 0.0;
    for (int j = 0; j < d; ++j) {
      std::vector<double> xs(x_in.rows()), ys(y_in.rows());
      for (int i = 0; i < x_in.rows(); ++i) xs[static_cast<std::size_t>(i)] = x_in(i, j);
      for (int i = 0; i < y_in.rows(); ++i) ys[static_cast<std::size_t>(i)] = y_in(i, j);
      double dj = 0.0;
      const double pj = detail::ks_marginal_pvalue(xs, ys, &dj);
      p_min = std::min(p_min, pj);
      d_max = std::max(d_max, dj);
    }
    res.statistic = d_max;
    res.p_value = std::min(1.0, p_min * d);  // Bonferroni over marginals
    return res;
  }

  res.method = "energy";
  const int B = opts.n_permutations;

  if (d == 1) {
    const int n = static_cast<int>(x_in.rows());
    const int m = static_cast<int>(y_in.rows());
    res.n_x = n;
    res.n_y = m;
    std::vector<double> pooled(static_cast<std::size_t>(n + m));
    for (int i = 0; i < n; ++i) pooled[static_cast<std::size_t>(i)] = x_in(i, 0);
    for (int i = 0; i < m; ++i) pooled[static_cast<std::size_t>(n + i)] = y_in(i, 0);
    const auto sorted = detail::sort_pooled(pooled);
    std::vector<std::uint8_t> obs(static_cast<std::size_t>(n + m), 0);
    for (int i = 0; i < n; ++i) obs[static_cast<std::size_t>(i)] = 1;
    res.statistic = detail::energy_1d(sorted, obs, n, m);
    std::vector<double> perm_stats(static_cast<std::size_t>(B));
    parallel_for(
        static_cast<std::size_t>(B),
        [&](std::size_t b) {
          RngStream rng(opts.seed, b, Role::permutation);
          std::vector<std::uint32_t> idx(static_cast<std::size_t>(n + m));
          std::iota(idx.begin(), idx.end(), 0U);
          rng.shuffle(idx);
          std::vector<std::uint8_t> lab(static_cast<std::size_t>(n + m), 0);
          for (int i = 0; i < n; ++i) lab[idx[static_cast<std::size_t>(i)]] = 1;
          perm_stats[b] = detail::energy_1d(sorted, lab, n, m);
        },
        opts.threads);
    int count = 0;
    for (double s : perm_stats)
      if (s >= res.statistic) ++count;
    res.p_value = (1.0 + count) / (B + 1.0);
    return res;
  }

  const Eigen::MatrixXd x = detail::subsample_rows(x_in, opts.cap, opts.seed, 1);
  const Eigen::MatrixXd y = detail::subsample_rows(y_in, opts.cap, opts.seed, 2);
  const int n = static_cast<int>(x.rows());
  const int m = static_cast<int>(y.rows());
  res.n_x = n;
  res.n_y = m;
  Eigen::MatrixXd pooled(n + m, d);
  pooled << x, y;
  const auto dm = detail::build_distances(pooled, opts.threads);
  std::vector<std::uint32_t> xi(static_cast<std::size_t>(n)),
      yi(static_cast<std::size_t>(m));
  std::iota(xi.begin(), xi.end(), 0U);
  std::iota(yi.begin(), yi.end(), static_cast<std::uint32_t>(n));
  res.statistic = detail::energy_nd(dm, xi, yi);

  std::vector<double> perm_stats(static_cast<std::size_t>(B));
  parallel_for(
      static_cast<std::size_t>(B),
      [&](std::size_t b) {
        RngStream rng(opts.seed, b, Role::permutation);
        std::vector<std::uint32_t> idx(static_cast<std::size_t>(n + m));
        std::iota(idx.begin(), idx.end(), 0U);
        rng.shuffle(idx);
        std::vector<std::uint32_t> px(idx.begin(), idx.begin() + n);
        std::vector<std::uint32_t> py(idx.begin() + n, idx.end());
        // Sorted index lists keep the matrix scans cache-friendly.
        std::sort(px.begin(), px.end());
        std::sort(py.begin(), py.end());
        perm_stats[b] = detail::energy_nd(dm, px, py);
      },
      opts.threads);
  int count = 0;
  for (double s : perm_stats)
    if (s >= res.statistic) ++count;
  res.p_value = (1.0 + count) / (B + 1.0);
  return res;
}

}  // namespace liesim
