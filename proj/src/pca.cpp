#include "emgds/pca.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emgds/error.hpp"

namespace emgds {

namespace {
constexpr double kNegativeEigenFloor = -1e-10;
}

double PcaModel::explained_fraction() const {
  if (!(total_variance > 0.0)) return 1.0;
  double s = 0.0;
  for (double e : eigenvalues) s += e;
  return s / total_variance;
}

PcaModel fit_pca(std::span<const std::vector<double>> rows, const Retain& retain,
                 const PcaOptions& options) {
  if (rows.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "PCA needs at least 2 vectors, got " +
                                              std::to_string(rows.size()));
  }
  const std::size_t d = rows.front().size();
  if (d == 0) throw Error(ErrorCode::DimensionMismatch, "PCA input has dimension 0");
  for (const auto& r : rows) {
    if (r.size() != d) throw Error(ErrorCode::DimensionMismatch, "PCA inputs differ in dimension");
    for (double x : r)
      if (!std::isfinite(x)) throw Error(ErrorCode::NonFiniteInput, "PCA input is not finite");
  }
  if (const auto* cc = std::get_if<ComponentCount>(&retain); cc && (cc->count < 1 || cc->count > d)) {
    throw Error(ErrorCode::InvalidConfig, "component count must lie in [1, " + std::to_string(d) + "]");
  }
  if (const auto* vf = std::get_if<VarianceFraction>(&retain);
      vf && !(vf->fraction > 0.0 && vf->fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "variance fraction must lie in (0, 1]");
  }

  const auto n = static_cast<double>(rows.size());
  PcaModel model;
  model.mean.assign(d, 0.0);
  for (const auto& r : rows)
    for (std::size_t j = 0; j < d; ++j) model.mean[j] += r[j];
  for (auto& m : model.mean) m /= n;

  model.scale.assign(d, 1.0);
  if (options.standardize) {
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (const auto& r : rows) s += (r[j] - model.mean[j]) * (r[j] - model.mean[j]);
      const double sd = std::sqrt(s / (n - 1.0));
      if (sd > 0.0) model.scale[j] = sd;
    }
  }

  Matrix cov(d, d);
  std::vector<double> z(d);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < d; ++j) z[j] = (r[j] - model.mean[j]) / model.scale[j];
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) cov(i, j) += z[i] * z[j];
  }
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) {
      cov(i, j) /= (n - 1.0);
      cov(j, i) = cov(i, j);
    }

  model.total_variance = 0.0;
  for (std::size_t i = 0; i < d; ++i) model.total_variance += cov(i, i);

  auto eig = jacobi_eigen(cov);
  for (auto& e : eig.values) {
    if (e < 0.0 && e >= kNegativeEigenFloor) e = 0.0;
  }
  model.spectrum = eig.values;

  std::size_t l = d;
  if (const auto* cc = std::get_if<ComponentCount>(&retain)) {
    l = cc->count;
  } else {
    const double target = std::get<VarianceFraction>(retain).fraction;
    if (model.total_variance > 0.0) {
      double cum = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        cum += eig.values[k];
        // A relative slack absorbs round-off when the target is exactly 1.
        if (cum >= target * model.total_variance * (1.0 - 1e-12)) {
          l = k + 1;
          break;
        }
      }
    } else {
      l = 1;
    }
  }

  model.components = Matrix(l, d);
  model.eigenvalues.assign(eig.values.begin(), eig.values.begin() + static_cast<std::ptrdiff_t>(l));
  for (std::size_t k = 0; k < l; ++k) {
    auto src = eig.vectors.row(k);
    std::size_t pivot = 0;
    for (std::size_t j = 1; j < d; ++j)
      if (std::abs(src[j]) > std::abs(src[pivot])) pivot = j;
    const double sign = src[pivot] < 0.0 ? -1.0 : 1.0;
    auto dst = model.components.row(k);
    for (std::size_t j = 0; j < d; ++j) dst[j] = sign * src[j];
  }
  return model;
}

PcaModel fit_pca(std::span<const FeatureVector> vectors, const Retain& retain,
                 const PcaOptions& options) {
  std::vector<std::vector<double>> rows;
  rows.reserve(vectors.size());
  for (const auto& v : vectors) rows.push_back(v.values);
  return fit_pca(rows, retain, options);
}

std::vector<double> project(const PcaModel& model, std::span<const double> v) {
  const std::size_t d = model.input_dim();
  if (v.size() != d) {
    throw Error(ErrorCode::DimensionMismatch, "project: expected dimension " + std::to_string(d) +
                                                  ", got " + std::to_string(v.size()));
  }
  std::vector<double> z(d);
  for (std::size_t j = 0; j < d; ++j) z[j] = (v[j] - model.mean[j]) / model.scale[j];
  return model.components.multiply(z);
}

std::vector<double> reconstruct(const PcaModel& model, std::span<const double> reduced) {
  const std::size_t l = model.output_dim();
  if (reduced.size() != l) {
    throw Error(ErrorCode::DimensionMismatch, "reconstruct: expected length " + std::to_string(l) +
                                                  ", got " + std::to_string(reduced.size()));
  }
  const std::size_t d = model.input_dim();
  std::vector<double> out(d, 0.0);
  for (std::size_t k = 0; k < l; ++k) {
    const auto row = model.components.row(k);
    for (std::size_t j = 0; j < d; ++j) out[j] += row[j] * reduced[k];
  }
  for (std::size_t j = 0; j < d; ++j) out[j] = model.mean[j] + model.scale[j] * out[j];
  return out;
}

}  // namespace emgds
