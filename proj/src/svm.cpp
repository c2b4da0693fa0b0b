#include "emgds/svm.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <random>
#include <set>

#include "csv_util.hpp"
#include "emgds/error.hpp"

namespace emgds {

double kernel_eval(const KernelSpec& spec, std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw Error(ErrorCode::DimensionMismatch, "kernel: " + std::to_string(u.size()) + " vs " +
                                                  std::to_string(v.size()));
  }
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, LinearKernel>) {
          return dot(u, v);
        } else if constexpr (std::is_same_v<K, RbfKernel>) {
          if (!k.gamma) throw Error(ErrorCode::InvalidConfig, "RBF gamma not resolved");
          return std::exp(-*k.gamma * squared_distance(u, v));
        } else {
          const double base = dot(u, v) + k.coef0;
          double out = 1.0;
          for (int i = 0; i < k.degree; ++i) out *= base;
          return out;
        }
      },
      spec);
}

KernelSpec resolve_kernel(const KernelSpec& spec, std::span<const std::vector<double>> inputs) {
  if (const auto* poly = std::get_if<PolynomialKernel>(&spec); poly && poly->degree < 1) {
    throw Error(ErrorCode::InvalidConfig, "polynomial degree must be >= 1");
  }
  const auto* rbf = std::get_if<RbfKernel>(&spec);
  if (!rbf) return spec;
  if (rbf->gamma) {
    if (!(*rbf->gamma > 0.0) || !std::isfinite(*rbf->gamma)) {
      throw Error(ErrorCode::InvalidConfig, "RBF gamma must be positive");
    }
    return spec;
  }
  if (inputs.empty()) throw Error(ErrorCode::TooFewSamples, "cannot resolve gamma without inputs");
  const std::size_t l = inputs.front().size();
  const auto n = static_cast<double>(inputs.size());
  double var_sum = 0.0;
  for (std::size_t j = 0; j < l; ++j) {
    double mean = 0.0;
    for (const auto& x : inputs) mean += x[j];
    mean /= n;
    double s = 0.0;
    for (const auto& x : inputs) s += (x[j] - mean) * (x[j] - mean);
    var_sum += s / n;
  }
  const double mean_var = l > 0 ? var_sum / static_cast<double>(l) : 0.0;
  const double gamma = mean_var > 0.0 ? 1.0 / (static_cast<double>(l) * mean_var) : 1.0;
  return RbfKernel{gamma};
}

std::string describe_kernel(const KernelSpec& spec) {
  return std::visit(
      [](const auto& k) -> std::string {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, LinearKernel>) {
          return "linear";
        } else if constexpr (std::is_same_v<K, RbfKernel>) {
          return k.gamma ? "rbf(gamma=" + detail::shortest(*k.gamma) + ")" : "rbf(gamma=auto)";
        } else {
          return "poly(degree=" + std::to_string(k.degree) + ",coef0=" + detail::shortest(k.coef0) + ")";
        }
      },
      spec);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k) noexcept {
  // splitmix64 finalizer over the master seed offset by the sub-problem index.
  std::uint64_t z = master + (k + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

class SmoSolver {
 public:
  SmoSolver(std::span<const std::vector<double>> x, std::span<const int> y, const KernelSpec& kernel,
            const SvmParams& params, SmoTrace* trace)
      : x_(x), y_(y), n_(x.size()), c_(params.c), tol_(params.tol), gram_(n_, n_),
        alpha_(n_, 0.0), error_(n_), rng_(params.seed), trace_(trace) {
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t j = i; j < n_; ++j) {
        const double k = kernel_eval(kernel, x_[i], x_[j]);
        gram_(i, j) = gram_(j, i) = k;
      }
      error_[i] = -static_cast<double>(y_[i]);
    }
  }

  void run(int max_passes) {
    int passes = 0;
    int changed = 0;
    bool examine_all = true;
    bool converged = false;
    while ((changed > 0 || examine_all) && passes < max_passes) {
      ++passes;
      changed = 0;
      if (examine_all) {
        for (std::size_t i = 0; i < n_; ++i) changed += examine(i);
      } else {
        for (std::size_t i = 0; i < n_; ++i)
          if (is_free(i)) changed += examine(i);
      }
      if (examine_all) {
        examine_all = false;
        if (changed == 0) converged = true;
      } else if (changed == 0) {
        examine_all = true;
      }
    }
    if (trace_) {
      trace_->passes = passes;
      trace_->converged = converged;
    }
  }

  double objective() const {
    double sum_alpha = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (alpha_[i] == 0.0) continue;
      sum_alpha += alpha_[i];
      // sum_j alpha_j y_j K_ij = E_i + y_i - b
      quad += alpha_[i] * y_[i] * (error_[i] + y_[i] - bias_);
    }
    return sum_alpha - 0.5 * quad;
  }

  SvmModel model(const KernelSpec& kernel) const {
    constexpr double kSupportEps = 1e-12;
    std::vector<std::size_t> support;
    for (std::size_t i = 0; i < n_; ++i)
      if (alpha_[i] > kSupportEps) support.push_back(i);
    if (support.empty()) {
      throw Error(ErrorCode::InsufficientClasses, "SMO finished without support vectors");
    }

    // Bias: average of y_i - sum_j alpha_j y_j K_ij over free vectors,
    // falling back to all support vectors.
    auto margin_bias = [&](std::size_t i) {
      double s = 0.0;
      for (std::size_t j : support) s += alpha_[j] * y_[j] * gram_(i, j);
      return y_[i] - s;
    };
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t i : support) {
      if (is_free(i)) {
        acc += margin_bias(i);
        ++count;
      }
    }
    if (count == 0) {
      for (std::size_t i : support) acc += margin_bias(i);
      count = support.size();
    }

    SvmModel m;
    m.kernel = kernel;
    m.c = c_;
    m.bias = acc / static_cast<double>(count);
    m.support_vectors = Matrix(support.size(), x_.front().size());
    m.dual_coeffs.reserve(support.size());
    for (std::size_t r = 0; r < support.size(); ++r) {
      const auto& src = x_[support[r]];
      std::copy(src.begin(), src.end(), m.support_vectors.row(r).begin());
      m.dual_coeffs.push_back(alpha_[support[r]] * y_[support[r]]);
    }
    return m;
  }

 private:
  bool is_free(std::size_t i) const {
    const double eps = 1e-8 * c_;
    return alpha_[i] > eps && alpha_[i] < c_ - eps;
  }

  int examine(std::size_t i2) {
    const double y2 = y_[i2];
    const double a2 = alpha_[i2];
    const double r2 = error_[i2] * y2;
    if (!((r2 < -tol_ && a2 < c_) || (r2 > tol_ && a2 > 0.0))) return 0;

    std::vector<std::size_t> free_idx;
    for (std::size_t i = 0; i < n_; ++i)
      if (is_free(i)) free_idx.push_back(i);

    if (free_idx.size() > 1) {
      // Second-choice heuristic: maximize |E1 - E2|; ties keep the lowest index.
      std::size_t best = n_;
      double best_gap = -1.0;
      for (std::size_t i : free_idx) {
        const double gap = std::abs(error_[i] - error_[i2]);
        if (gap > best_gap) {
          best_gap = gap;
          best = i;
        }
      }
      if (best != n_ && take_step(best, i2)) return 1;
    }
    if (!free_idx.empty()) {
      const std::size_t start = random_index(free_idx.size());
      for (std::size_t k = 0; k < free_idx.size(); ++k) {
        if (take_step(free_idx[(start + k) % free_idx.size()], i2)) return 1;
      }
    }
    const std::size_t start = random_index(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      if (take_step((start + k) % n_, i2)) return 1;
    }
    return 0;
  }

  std::size_t random_index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(rng_);
  }

  bool take_step(std::size_t i1, std::size_t i2) {
    if (i1 == i2) return false;
    const double a1 = alpha_[i1], a2 = alpha_[i2];
    const double y1 = y_[i1], y2 = y_[i2];
    const double e1 = error_[i1], e2 = error_[i2];
    const double s = y1 * y2;

    double lo, hi;
    if (y1 != y2) {
      lo = std::max(0.0, a2 - a1);
      hi = std::min(c_, c_ + a2 - a1);
    } else {
      lo = std::max(0.0, a1 + a2 - c_);
      hi = std::min(c_, a1 + a2);
    }
    if (lo >= hi) return false;

    const double k11 = gram_(i1, i1), k12 = gram_(i1, i2), k22 = gram_(i2, i2);
    const double eta = k11 + k22 - 2.0 * k12;
    double a2_new;
    if (eta > 0.0) {
      a2_new = std::clamp(a2 + y2 * (e1 - e2) / eta, lo, hi);
    } else {
      // Negated dual at the segment ends (non-positive curvature).
      const double f1 = y1 * (e1 - bias_) - a1 * k11 - s * a2 * k12;
      const double f2 = y2 * (e2 - bias_) - s * a1 * k12 - a2 * k22;
      auto end_value = [&](double a2_end) {
        const double a1_end = a1 + s * (a2 - a2_end);
        return a1_end * f1 + a2_end * f2 + 0.5 * a1_end * a1_end * k11 +
               0.5 * a2_end * a2_end * k22 + s * a2_end * a1_end * k12;
      };
      const double lobj = end_value(lo), hobj = end_value(hi);
      constexpr double kEps = 1e-12;
      if (lobj < hobj - kEps) {
        a2_new = lo;
      } else if (lobj > hobj + kEps) {
        a2_new = hi;
      } else {
        a2_new = a2;
      }
    }
    constexpr double kStepEps = 1e-10;
    if (std::abs(a2_new - a2) < kStepEps * (a2_new + a2 + kStepEps)) return false;

    double a1_new = a1 + s * (a2 - a2_new);
    if (a1_new < 0.0) {
      a2_new += s * a1_new;
      a1_new = 0.0;
    } else if (a1_new > c_) {
      a2_new += s * (a1_new - c_);
      a1_new = c_;
    }
    a2_new = std::clamp(a2_new, 0.0, c_);

    const double d1 = y1 * (a1_new - a1);
    const double d2 = y2 * (a2_new - a2);
    const double b1 = bias_ - e1 - d1 * k11 - d2 * k12;
    const double b2 = bias_ - e2 - d1 * k12 - d2 * k22;
    const double eps = 1e-8 * c_;
    double b_new;
    if (a1_new > eps && a1_new < c_ - eps) {
      b_new = b1;
    } else if (a2_new > eps && a2_new < c_ - eps) {
      b_new = b2;
    } else {
      b_new = 0.5 * (b1 + b2);
    }
    const double db = b_new - bias_;
    for (std::size_t i = 0; i < n_; ++i) {
      error_[i] += d1 * gram_(i1, i) + d2 * gram_(i2, i) + db;
    }
    alpha_[i1] = a1_new;
    alpha_[i2] = a2_new;
    bias_ = b_new;
    if (trace_) trace_->objective.push_back(objective());
    return true;
  }

  std::span<const std::vector<double>> x_;
  std::span<const int> y_;
  std::size_t n_;
  double c_;
  double tol_;
  Matrix gram_;
  std::vector<double> alpha_;
  std::vector<double> error_;  // f(x_i) - y_i
  double bias_ = 0.0;
  std::mt19937_64 rng_;
  SmoTrace* trace_;
};

void check_inputs(std::span<const std::vector<double>> inputs) {
  if (inputs.empty()) throw Error(ErrorCode::TooFewSamples, "no training inputs");
  const std::size_t l = inputs.front().size();
  for (const auto& x : inputs) {
    if (x.size() != l) throw Error(ErrorCode::DimensionMismatch, "training inputs differ in length");
    for (double v : x)
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteInput, "training input is not finite");
  }
}

}  // namespace

SvmModel train_binary(std::span<const std::vector<double>> inputs, std::span<const int> labels,
                      const SvmParams& params, SmoTrace* trace) {
  check_inputs(inputs);
  if (labels.size() != inputs.size()) {
    throw Error(ErrorCode::DimensionMismatch, "labels and inputs differ in count");
  }
  if (!(params.c > 0.0) || !std::isfinite(params.c)) throw Error(ErrorCode::InvalidConfig, "C must be positive");
  if (!(params.tol > 0.0)) throw Error(ErrorCode::InvalidConfig, "tol must be positive");
  if (params.max_passes < 1) throw Error(ErrorCode::InvalidConfig, "max_passes must be >= 1");
  bool has_pos = false, has_neg = false;
  for (int y : labels) {
    if (y == 1) has_pos = true;
    else if (y == -1) has_neg = true;
    else throw Error(ErrorCode::InvalidConfig, "binary labels must be +1 or -1");
  }
  if (!has_pos || !has_neg) {
    throw Error(ErrorCode::InsufficientClasses, "binary training needs both +1 and -1 examples");
  }
  const KernelSpec kernel = resolve_kernel(params.kernel, inputs);
  SmoSolver solver(inputs, labels, kernel, params, trace);
  solver.run(params.max_passes);
  return solver.model(kernel);
}

double decision(const SvmModel& model, std::span<const double> v) {
  if (v.size() != model.support_vectors.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "decision: expected dimension " +
                                                  std::to_string(model.support_vectors.cols()) +
                                                  ", got " + std::to_string(v.size()));
  }
  double f = model.bias;
  for (std::size_t i = 0; i < model.dual_coeffs.size(); ++i) {
    f += model.dual_coeffs[i] * kernel_eval(model.kernel, model.support_vectors.row(i), v);
  }
  return f;
}

MulticlassSvmModel train_multiclass(std::span<const std::vector<double>> inputs,
                                    std::span<const int> labels, const SvmParams& params,
                                    std::optional<std::vector<int>> class_order) {
  check_inputs(inputs);
  if (labels.size() != inputs.size()) {
    throw Error(ErrorCode::DimensionMismatch, "labels and inputs differ in count");
  }
  std::vector<int> order;
  if (class_order) {
    order = *class_order;
  } else {
    const std::set<int> distinct(labels.begin(), labels.end());
    order.assign(distinct.begin(), distinct.end());
  }
  if (order.size() < 2) {
    throw Error(ErrorCode::InsufficientClasses, "multiclass training needs at least 2 classes");
  }

  SvmParams shared = params;
  shared.kernel = resolve_kernel(params.kernel, inputs);

  std::vector<std::future<SvmModel>> jobs;
  jobs.reserve(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    jobs.push_back(std::async(std::launch::async, [&, k] {
      std::vector<int> y(labels.size());
      for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == order[k] ? 1 : -1;
      SvmParams p = shared;
      p.seed = derive_seed(params.seed, k);
      try {
        auto m = train_binary(inputs, y, p);
        m.labels = {"rest", std::to_string(order[k])};
        return m;
      } catch (const Error& e) {
        throw Error(e.code(), "class " + std::to_string(order[k]) + " vs rest: " + e.what());
      }
    }));
  }
  MulticlassSvmModel out;
  out.class_order = order;
  for (auto& j : jobs) out.models.push_back(j.get());
  return out;
}

std::vector<double> decision_values(const MulticlassSvmModel& model, std::span<const double> v) {
  std::vector<double> out;
  out.reserve(model.models.size());
  for (const auto& m : model.models) out.push_back(decision(m, v));
  return out;
}

int predict_multiclass(const MulticlassSvmModel& model, std::span<const double> v) {
  const auto values = decision_values(model, v);
  std::size_t best = 0;
  for (std::size_t k = 1; k < values.size(); ++k)
    if (values[k] > values[best]) best = k;
  return model.class_order.at(best);
}

}  // namespace emgds
