#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "emgds/features.hpp"
#include "emgds/linalg.hpp"

namespace emgds {

struct VarianceFraction {
  double fraction = 0.95;
};
struct ComponentCount {
  std::size_t count = 2;
};
using Retain = std::variant<VarianceFraction, ComponentCount>;

/// Standardize-then-project model. `components` holds l orthonormal row
/// eigenvectors of the standardized covariance; `spectrum` keeps all d
/// eigenvalues, `eigenvalues` the retained l.
struct PcaModel {
  std::vector<double> mean;
  std::vector<double> scale;
  Matrix components;
  std::vector<double> eigenvalues;
  std::vector<double> spectrum;
  double total_variance = 0.0;

  std::size_t input_dim() const noexcept { return mean.size(); }
  std::size_t output_dim() const noexcept { return components.rows(); }
  double explained_fraction() const;

  bool operator==(const PcaModel&) const = default;
};

struct PcaOptions {
  /// Divide by per-feature sample std before the decomposition. Zero-variance
  /// features keep scale 1.
  bool standardize = true;
};

PcaModel fit_pca(std::span<const std::vector<double>> rows, const Retain& retain,
                 const PcaOptions& options = {});
PcaModel fit_pca(std::span<const FeatureVector> vectors, const Retain& retain,
                 const PcaOptions& options = {});

std::vector<double> project(const PcaModel& model, std::span<const double> v);
std::vector<double> reconstruct(const PcaModel& model, std::span<const double> reduced);

}  // namespace emgds
