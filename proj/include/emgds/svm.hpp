#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "emgds/linalg.hpp"

namespace emgds {

struct LinearKernel {
  bool operator==(const LinearKernel&) const = default;
};
struct RbfKernel {
  /// Empty means "auto": resolved at fit time to 1 / (l * mean feature variance).
  std::optional<double> gamma;
  bool operator==(const RbfKernel&) const = default;
};
struct PolynomialKernel {
  int degree = 3;
  double coef0 = 1.0;
  bool operator==(const PolynomialKernel&) const = default;
};
using KernelSpec = std::variant<LinearKernel, RbfKernel, PolynomialKernel>;

double kernel_eval(const KernelSpec& spec, std::span<const double> u, std::span<const double> v);

/// Replaces an auto RBF gamma with its value for `inputs`; other kernels
/// pass through unchanged.
KernelSpec resolve_kernel(const KernelSpec& spec, std::span<const std::vector<double>> inputs);

std::string describe_kernel(const KernelSpec& spec);

struct SvmParams {
  KernelSpec kernel = RbfKernel{};
  double c = 1.0;
  double tol = 1e-3;
  int max_passes = 200;
  std::uint64_t seed = 42;
};

/// Binary soft-margin SVM: f(v) = sum_i dual_coeffs[i] K(sv_i, v) + bias.
struct SvmModel {
  Matrix support_vectors;
  std::vector<double> dual_coeffs;  // alpha_i * y_i
  double bias = 0.0;
  KernelSpec kernel;  // always resolved
  double c = 1.0;
  std::pair<std::string, std::string> labels{"-1", "+1"};  // (negative, positive)

  std::size_t support_count() const noexcept { return dual_coeffs.size(); }
  bool operator==(const SvmModel&) const = default;
};

/// Optional diagnostics from a training run.
struct SmoTrace {
  std::vector<double> objective;  // dual objective after every accepted step
  int passes = 0;
  bool converged = false;
};

/// Sequential minimal optimization with Platt's working-set heuristics.
/// `labels` must be +1/-1.
SvmModel train_binary(std::span<const std::vector<double>> inputs, std::span<const int> labels,
                      const SvmParams& params, SmoTrace* trace = nullptr);

double decision(const SvmModel& model, std::span<const double> v);
/// Positive label when the decision value is >= 0.
inline int predict_sign(const SvmModel& model, std::span<const double> v) {
  return decision(model, v) >= 0.0 ? +1 : -1;
}

/// One-vs-rest ensemble; class ids are arbitrary integers.
struct MulticlassSvmModel {
  std::vector<int> class_order;
  std::vector<SvmModel> models;  // models[k] separates class_order[k] from the rest

  bool operator==(const MulticlassSvmModel&) const = default;
};

/// Trains class-vs-rest models. Without an explicit `class_order` the
/// distinct labels are used in ascending order; an explicit order may name a
/// class with no examples, which fails with InsufficientClasses.
MulticlassSvmModel train_multiclass(std::span<const std::vector<double>> inputs,
                                    std::span<const int> labels, const SvmParams& params,
                                    std::optional<std::vector<int>> class_order = std::nullopt);

std::vector<double> decision_values(const MulticlassSvmModel& model, std::span<const double> v);
/// Argmax of the per-class decisions; ties go to the earliest class.
int predict_multiclass(const MulticlassSvmModel& model, std::span<const double> v);

/// Seed for the k-th sub-problem of an ensemble trained from `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t k) noexcept;

}  // namespace emgds
