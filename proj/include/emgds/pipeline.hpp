#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "emgds/data.hpp"
#include "emgds/features.hpp"
#include "emgds/pca.hpp"
#include "emgds/svm.hpp"

namespace emgds {

struct Hyperparams {
  Retain retain = VarianceFraction{0.95};
  /// Kernel, C, tol, max_passes and the master seed.
  SvmParams svm;
};

/// Conventional path: one PCA and a 6-class one-vs-rest SVM.
struct SingleStageModel {
  FeatureConfig feature_config;
  PcaModel pca;
  MulticlassSvmModel classifier;  // class ids are activity indices

  bool operator==(const SingleStageModel&) const = default;
};

struct GroupStage {
  PcaModel pca;
  MulticlassSvmModel classifier;

  bool operator==(const GroupStage&) const = default;
};

/// Dual-stage path: power/precision first, then a 3-class model inside the
/// chosen group. Each stage has its own PCA.
struct DualStageModel {
  FeatureConfig feature_config;
  PcaModel stage1_pca;
  SvmModel stage1;  // +1 = power, -1 = precision
  GroupStage power;
  GroupStage precision;

  bool operator==(const DualStageModel&) const = default;
};

using Model = std::variant<SingleStageModel, DualStageModel>;

struct DualPrediction {
  Activity activity;
  Group group;
};

SingleStageModel train_single(std::span<const FeatureVector> train, const Hyperparams& hyper = {});
DualStageModel train_dual(std::span<const FeatureVector> train, const Hyperparams& hyper = {});

Activity predict_single(const SingleStageModel& model, const FeatureVector& v);
DualPrediction predict_dual(const DualStageModel& model, const FeatureVector& v);
Activity predict(const Model& model, const FeatureVector& v);

struct GroupAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

struct DualStageStats {
  GroupAccuracy stage1;
  /// Final-class accuracy over test vectors of the group that stage 1 routed
  /// correctly.
  GroupAccuracy power_routed;
  GroupAccuracy precision_routed;
  /// Final-class accuracy over every test vector of the group.
  GroupAccuracy power_all;
  GroupAccuracy precision_all;
};

using ConfusionMatrix = std::array<std::array<std::size_t, kNumActivities>, kNumActivities>;

struct EvalReport {
  std::string mode;           // "single" or "dual"
  ConfusionMatrix confusion{};  // rows = true class, columns = predicted
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  std::optional<DualStageStats> dual;
};

EvalReport evaluate(const Model& model, std::span<const FeatureVector> test);

/// Feature vectors whose label is one of `classes`.
std::vector<FeatureVector> filter_classes(std::span<const FeatureVector> vectors,
                                          std::span<const Activity> classes);

}  // namespace emgds
