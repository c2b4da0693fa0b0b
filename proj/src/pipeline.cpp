#include "emgds/pipeline.hpp"

#include <algorithm>
#include <future>

#include "emgds/error.hpp"

namespace emgds {

namespace {

constexpr std::array<Activity, 3> kPowerClasses = {Activity::H, Activity::S, Activity::C};
constexpr std::array<Activity, 3> kPrecisionClasses = {Activity::P, Activity::L, Activity::T};

// Sub-problem indices used to derive per-stage seeds from the master seed.
constexpr std::uint64_t kStage1SeedIndex = 100;
constexpr std::uint64_t kPowerSeedIndex = 101;
constexpr std::uint64_t kPrecisionSeedIndex = 102;

FeatureConfig check_training_set(std::span<const FeatureVector> train) {
  if (train.empty()) throw Error(ErrorCode::MissingClass, "empty training set");
  const auto& layout = train.front().layout;
  std::array<std::size_t, kNumActivities> counts{};
  for (const auto& v : train) {
    if (!v.label) throw Error(ErrorCode::MissingClass, "training vector without a label");
    if (v.layout != layout || v.values.size() != layout.size()) {
      throw Error(ErrorCode::LayoutMismatch, "training vectors have different layouts");
    }
    ++counts[static_cast<std::size_t>(activity_index(*v.label))];
  }
  for (Activity a : kActivities) {
    if (counts[static_cast<std::size_t>(activity_index(a))] == 0) {
      throw Error(ErrorCode::MissingClass, std::string("training set has no examples of class ") +
                                               activity_code(a));
    }
  }
  return config_from_layout(layout);
}

void check_layout(const FeatureConfig& cfg, const FeatureVector& v) {
  const auto expected = cfg.layout();
  if (v.values.size() != expected.size() || (!v.layout.empty() && v.layout != expected)) {
    throw Error(ErrorCode::LayoutMismatch, "vector of dimension " + std::to_string(v.values.size()) +
                                               " does not match the model layout (" +
                                               std::to_string(expected.size()) + " features)");
  }
}

std::vector<std::vector<double>> project_all(const PcaModel& pca, std::span<const FeatureVector> vs) {
  std::vector<std::vector<double>> out;
  out.reserve(vs.size());
  for (const auto& v : vs) out.push_back(project(pca, v.values));
  return out;
}

std::vector<int> activity_ids(std::span<const FeatureVector> vs) {
  std::vector<int> out;
  out.reserve(vs.size());
  for (const auto& v : vs) out.push_back(activity_index(*v.label));
  return out;
}

std::vector<int> class_ids(std::span<const Activity> classes) {
  std::vector<int> out;
  for (Activity a : classes) out.push_back(activity_index(a));
  return out;
}

GroupStage train_group(std::span<const FeatureVector> vs, std::span<const Activity> classes,
                       const Hyperparams& hyper, std::uint64_t seed_index) {
  GroupStage stage;
  stage.pca = fit_pca(vs, hyper.retain);
  SvmParams p = hyper.svm;
  p.seed = derive_seed(hyper.svm.seed, seed_index);
  stage.classifier =
      train_multiclass(project_all(stage.pca, vs), activity_ids(vs), p, class_ids(classes));
  return stage;
}

}  // namespace

std::vector<FeatureVector> filter_classes(std::span<const FeatureVector> vectors,
                                          std::span<const Activity> classes) {
  std::vector<FeatureVector> out;
  for (const auto& v : vectors) {
    if (v.label && std::find(classes.begin(), classes.end(), *v.label) != classes.end()) {
      out.push_back(v);
    }
  }
  return out;
}

SingleStageModel train_single(std::span<const FeatureVector> train, const Hyperparams& hyper) {
  SingleStageModel model;
  model.feature_config = check_training_set(train);
  model.pca = fit_pca(train, hyper.retain);
  model.classifier = train_multiclass(project_all(model.pca, train), activity_ids(train), hyper.svm,
                                      class_ids(kActivities));
  return model;
}

DualStageModel train_dual(std::span<const FeatureVector> train, const Hyperparams& hyper) {
  DualStageModel model;
  model.feature_config = check_training_set(train);

  // Stage 2 trains on the true group partitions, independent of stage 1.
  const auto power_vs = filter_classes(train, kPowerClasses);
  const auto precision_vs = filter_classes(train, kPrecisionClasses);
  auto power_job = std::async(std::launch::async, [&] {
    return train_group(power_vs, kPowerClasses, hyper, kPowerSeedIndex);
  });
  auto precision_job = std::async(std::launch::async, [&] {
    return train_group(precision_vs, kPrecisionClasses, hyper, kPrecisionSeedIndex);
  });

  model.stage1_pca = fit_pca(train, hyper.retain);
  std::vector<int> groups;
  groups.reserve(train.size());
  for (const auto& v : train) groups.push_back(group_of(*v.label) == Group::Power ? 1 : -1);
  SvmParams p = hyper.svm;
  p.seed = derive_seed(hyper.svm.seed, kStage1SeedIndex);
  model.stage1 = train_binary(project_all(model.stage1_pca, train), groups, p);
  model.stage1.labels = {"precision", "power"};

  model.power = power_job.get();
  model.precision = precision_job.get();
  return model;
}

Activity predict_single(const SingleStageModel& model, const FeatureVector& v) {
  check_layout(model.feature_config, v);
  const auto z = project(model.pca, v.values);
  return static_cast<Activity>(predict_multiclass(model.classifier, z));
}

DualPrediction predict_dual(const DualStageModel& model, const FeatureVector& v) {
  check_layout(model.feature_config, v);
  const auto z1 = project(model.stage1_pca, v.values);
  const Group group = predict_sign(model.stage1, z1) > 0 ? Group::Power : Group::Precision;
  const auto& stage = group == Group::Power ? model.power : model.precision;
  const auto z2 = project(stage.pca, v.values);
  return {static_cast<Activity>(predict_multiclass(stage.classifier, z2)), group};
}

Activity predict(const Model& model, const FeatureVector& v) {
  if (const auto* s = std::get_if<SingleStageModel>(&model)) return predict_single(*s, v);
  return predict_dual(std::get<DualStageModel>(model), v).activity;
}

EvalReport evaluate(const Model& model, std::span<const FeatureVector> test) {
  if (test.empty()) throw Error(ErrorCode::EmptyTestSet, "no test vectors");
  EvalReport report;
  const bool dual = std::holds_alternative<DualStageModel>(model);
  report.mode = dual ? "dual" : "single";
  if (dual) report.dual = DualStageStats{};

  for (const auto& v : test) {
    if (!v.label) throw Error(ErrorCode::InvalidConfig, "test vector without a label");
    const Activity truth = *v.label;
    Activity predicted;
    if (dual) {
      const auto pred = predict_dual(std::get<DualStageModel>(model), v);
      predicted = pred.activity;
      auto& st = *report.dual;
      const Group true_group = group_of(truth);
      const bool routed = pred.group == true_group;
      const bool right = predicted == truth;
      ++st.stage1.total;
      if (routed) ++st.stage1.correct;
      auto& all = true_group == Group::Power ? st.power_all : st.precision_all;
      ++all.total;
      if (right) ++all.correct;
      if (routed) {
        auto& r = true_group == Group::Power ? st.power_routed : st.precision_routed;
        ++r.total;
        if (right) ++r.correct;
      }
    } else {
      predicted = predict_single(std::get<SingleStageModel>(model), v);
    }
    ++report.confusion[static_cast<std::size_t>(activity_index(truth))]
                      [static_cast<std::size_t>(activity_index(predicted))];
    ++report.total;
  }
  for (std::size_t i = 0; i < kNumActivities; ++i) report.correct += report.confusion[i][i];
  report.accuracy = static_cast<double>(report.correct) / static_cast<double>(report.total);
  return report;
}

}  // namespace emgds
