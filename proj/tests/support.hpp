#pragma once

// Brute-force reference implementations and helpers shared by the unit
// tests and the acceptance runner. Nothing here calls into the library's
// numerical code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "emgds/emgds.hpp"

namespace oracle {

inline double mean(std::span<const double> x) {
  long double s = 0;
  for (double v : x) s += v;
  return static_cast<double>(s / static_cast<long double>(x.size()));
}

inline double mav(std::span<const double> x) {
  long double s = 0;
  for (double v : x) s += std::fabs(v);
  return static_cast<double>(s / static_cast<long double>(x.size()));
}

inline double std_dev(std::span<const double> x) {
  const double m = mean(x);
  long double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(static_cast<double>(s / static_cast<long double>(x.size() - 1)));
}

inline double rms(std::span<const double> x) {
  long double s = 0;
  for (double v : x) s += static_cast<long double>(v) * v;
  return std::sqrt(static_cast<double>(s / static_cast<long double>(x.size())));
}

inline std::size_t ssc(std::span<const double> x) {
  std::size_t n = 0;
  for (std::size_t k = 1; k + 1 < x.size(); ++k) {
    const bool peak = x[k] > x[k - 1] && x[k] > x[k + 1];
    const bool valley = x[k] < x[k - 1] && x[k] < x[k + 1];
    if (peak || valley) ++n;
  }
  return n;
}

inline double wl(std::span<const double> x) {
  long double s = 0;
  for (std::size_t k = 1; k < x.size(); ++k) s += std::fabs(x[k] - x[k - 1]);
  return static_cast<double>(s);
}

inline double central_moment(std::span<const double> x, int order) {
  const double m = mean(x);
  long double s = 0;
  for (double v : x) s += std::pow(static_cast<long double>(v - m), order);
  return static_cast<double>(s / static_cast<long double>(x.size()));
}

inline double skewness(std::span<const double> x) {
  return central_moment(x, 3) / std::pow(central_moment(x, 2), 1.5);
}

inline double kurtosis(std::span<const double> x) {
  const double m2 = central_moment(x, 2);
  return central_moment(x, 4) / (m2 * m2);
}

// Dense Gaussian elimination with partial pivoting; A is n x n row-major.
inline std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

// Yule-Walker normal equations with the biased, non-demeaned
// autocorrelation, solved directly instead of by recursion.
inline std::vector<double> ar_yule_walker(std::span<const double> x, int p) {
  const std::size_t n = x.size();
  std::vector<double> r(static_cast<std::size_t>(p) + 1);
  for (int k = 0; k <= p; ++k) {
    long double s = 0;
    for (std::size_t i = static_cast<std::size_t>(k); i < n; ++i) s += static_cast<long double>(x[i]) * x[i - k];
    r[static_cast<std::size_t>(k)] = static_cast<double>(s / static_cast<long double>(n));
  }
  std::vector<std::vector<double>> a(static_cast<std::size_t>(p), std::vector<double>(static_cast<std::size_t>(p)));
  std::vector<double> b(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) a[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = r[static_cast<std::size_t>(std::abs(i - j))];
    b[static_cast<std::size_t>(i)] = r[static_cast<std::size_t>(i) + 1];
  }
  return solve(a, b);
}

// Ordinary least squares regression of x_n on x_{n-1}..x_{n-p}.
inline std::vector<double> ar_least_squares(std::span<const double> x, int p) {
  const auto up = static_cast<std::size_t>(p);
  std::vector<std::vector<double>> ata(up, std::vector<double>(up, 0.0));
  std::vector<double> atb(up, 0.0);
  for (std::size_t n = up; n < x.size(); ++n) {
    for (std::size_t i = 0; i < up; ++i) {
      atb[i] += x[n - 1 - i] * x[n];
      for (std::size_t j = 0; j < up; ++j) ata[i][j] += x[n - 1 - i] * x[n - 1 - j];
    }
  }
  return solve(ata, atb);
}

inline std::vector<double> ar_process(std::span<const double> coeffs, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const std::size_t burn = 500;
  std::vector<double> x(n + burn, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    double v = normal(rng);
    for (std::size_t k = 0; k < coeffs.size() && k < i; ++k) v += coeffs[k] * x[i - 1 - k];
    x[i] = v;
  }
  return {x.begin() + static_cast<std::ptrdiff_t>(burn), x.end()};
}

inline bool close(double a, double b, double rel, double abs_floor = 0.0) {
  return std::fabs(a - b) <= std::max(rel * std::max(std::fabs(a), std::fabs(b)), abs_floor);
}

}  // namespace oracle

namespace testutil {

struct KktResult {
  bool ok = true;
  double max_alpha = 0.0;
  double balance = 0.0;
};

// 0 <= alpha <= C and sum(alpha * y) = 0 on a stored binary model.
inline KktResult kkt(const emgds::SvmModel& m) {
  KktResult r;
  long double sum = 0;
  for (double coef : m.dual_coeffs) {
    const double alpha = std::fabs(coef);
    r.max_alpha = std::max(r.max_alpha, alpha);
    if (alpha > m.c + 1e-9) r.ok = false;
    sum += coef;
  }
  r.balance = static_cast<double>(std::fabs(sum));
  if (r.balance >= 1e-6) r.ok = false;
  return r;
}

inline bool kkt_all(const emgds::MulticlassSvmModel& m) {
  return std::all_of(m.models.begin(), m.models.end(), [](const auto& b) { return kkt(b).ok; });
}

inline bool kkt_all(const emgds::Model& model) {
  if (const auto* s = std::get_if<emgds::SingleStageModel>(&model)) return kkt_all(s->classifier);
  const auto& d = std::get<emgds::DualStageModel>(model);
  return kkt(d.stage1).ok && kkt_all(d.power.classifier) && kkt_all(d.precision.classifier);
}

inline std::vector<double> random_segment(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  const double offset = unif(rng), scale = std::exp(unif(rng));
  std::vector<double> x(n);
  for (auto& v : x) v = offset + scale * normal(rng);
  return x;
}

struct SplitData {
  std::vector<emgds::FeatureVector> all, train, test;
};

inline SplitData split_features(std::vector<emgds::FeatureVector> rows, const emgds::Holdout& h) {
  SplitData out;
  std::vector<emgds::RecordingKey> keys;
  for (const auto& r : rows) keys.push_back(r.key);
  const auto idx = emgds::holdout_split(keys, h);
  for (auto i : idx.train) out.train.push_back(rows[i]);
  for (auto i : idx.test) out.test.push_back(rows[i]);
  out.all = std::move(rows);
  return out;
}

// Default synthetic corpus, features and 70/30 split, computed once.
inline const SplitData& default_synthetic() {
  static const SplitData data = [] {
    emgds::SynthConfig cfg;
    return split_features(emgds::extract(emgds::synth_corpus(cfg)), emgds::Holdout{0.7, cfg.seed});
  }();
  return data;
}

inline std::string dendrogram_root_side(const emgds::Dendrogram& t, bool left) {
  const auto& root = t.nodes[static_cast<std::size_t>(t.root())];
  std::string s;
  for (auto a : t.leaves(left ? root.left : root.right)) s += emgds::activity_code(a);
  return s;
}

}  // namespace testutil
