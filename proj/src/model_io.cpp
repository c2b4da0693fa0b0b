#include "emgds/model_io.hpp"

#include <cmath>

#include "csv_util.hpp"
#include "emgds/error.hpp"

namespace emgds {

using nlohmann::json;

namespace {

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    rows.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, std::size_t expected_cols) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  for (const auto& r : rows) {
    if (r.size() != expected_cols) throw Error(ErrorCode::SchemaError, "matrix row has wrong length");
  }
  if (rows.empty()) return Matrix(0, expected_cols);
  return Matrix::from_rows(rows);
}

json class_codes(const std::vector<int>& ids) {
  json out = json::array();
  for (int id : ids) {
    if (id < 0 || id >= static_cast<int>(kNumActivities)) {
      throw Error(ErrorCode::SchemaError, "class id out of range");
    }
    out.push_back(std::string(1, activity_code(static_cast<Activity>(id))));
  }
  return out;
}

std::vector<int> class_ids_from_json(const json& j) {
  std::vector<int> out;
  for (const auto& c : j) out.push_back(activity_index(parse_activity(c.get<std::string>())));
  return out;
}

template <typename Fn>
auto schema_guard(Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::VersionMismatch || e.code() == ErrorCode::SchemaError) throw;
    throw Error(ErrorCode::SchemaError, e.what());
  }
}

json group_stage_json(const GroupStage& s) {
  return {{"pca", to_json(s.pca)}, {"svm", to_json(s.classifier)}};
}

GroupStage group_stage_from_json(const json& j) {
  GroupStage s;
  s.pca = pca_from_json(j.at("pca"));
  s.classifier = multiclass_from_json(j.at("svm"));
  return s;
}

json accuracy_json(const GroupAccuracy& g) {
  return {{"correct", g.correct}, {"total", g.total}, {"accuracy", g.accuracy()}};
}

GroupAccuracy accuracy_from_json(const json& j) {
  return {j.at("correct").get<std::size_t>(), j.at("total").get<std::size_t>()};
}

}  // namespace

json to_json(const FeatureConfig& cfg_in) {
  const auto cfg = cfg_in.normalized();
  json include = json::array();
  for (auto f : cfg.include) include.push_back(std::string(family_name(f)));
  return {{"ar_order", cfg.ar_order}, {"include", include}, {"layout", cfg.layout()}};
}

FeatureConfig feature_config_from_json(const json& j) {
  FeatureConfig cfg;
  cfg.ar_order = j.at("ar_order").get<int>();
  cfg.include.clear();
  for (const auto& f : j.at("include")) cfg.include.push_back(parse_family(f.get<std::string>()));
  cfg.validate();
  if (j.contains("layout") && j.at("layout").get<std::vector<std::string>>() != cfg.layout()) {
    throw Error(ErrorCode::SchemaError, "feature_config layout disagrees with its families");
  }
  return cfg.normalized();
}

json to_json(const KernelSpec& kernel) {
  return std::visit(
      [](const auto& k) -> json {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, LinearKernel>) {
          return {{"type", "linear"}};
        } else if constexpr (std::is_same_v<K, RbfKernel>) {
          return {{"type", "rbf"}, {"gamma", k.gamma ? json(*k.gamma) : json("auto")}};
        } else {
          return {{"type", "poly"}, {"degree", k.degree}, {"coef0", k.coef0}};
        }
      },
      kernel);
}

KernelSpec kernel_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "linear") return LinearKernel{};
  if (type == "rbf") {
    const auto& g = j.at("gamma");
    if (g.is_string() && g.get<std::string>() == "auto") return RbfKernel{};
    const double gamma = g.get<double>();
    if (!(gamma > 0.0)) throw Error(ErrorCode::SchemaError, "gamma must be positive");
    return RbfKernel{gamma};
  }
  if (type == "poly") {
    PolynomialKernel k{j.at("degree").get<int>(), j.at("coef0").get<double>()};
    if (k.degree < 1) throw Error(ErrorCode::SchemaError, "degree must be >= 1");
    return k;
  }
  throw Error(ErrorCode::SchemaError, "unknown kernel type '" + type + "'");
}

json to_json(const PcaModel& m) {
  return {{"mean", m.mean},
          {"scale", m.scale},
          {"components", matrix_json(m.components)},
          {"eigenvalues", m.eigenvalues},
          {"spectrum", m.spectrum},
          {"total_variance", m.total_variance}};
}

PcaModel pca_from_json(const json& j) {
  PcaModel m;
  m.mean = j.at("mean").get<std::vector<double>>();
  m.scale = j.at("scale").get<std::vector<double>>();
  const std::size_t d = m.mean.size();
  m.components = matrix_from_json(j.at("components"), d);
  m.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
  m.spectrum = j.at("spectrum").get<std::vector<double>>();
  m.total_variance = j.at("total_variance").get<double>();
  const std::size_t l = m.components.rows();
  if (d == 0 || m.scale.size() != d || l < 1 || l > d || m.eigenvalues.size() != l ||
      m.spectrum.size() != d) {
    throw Error(ErrorCode::SchemaError, "PCA block has inconsistent dimensions");
  }
  for (double s : m.scale)
    if (!(s > 0.0)) throw Error(ErrorCode::SchemaError, "PCA scale must be positive");
  return m;
}

json to_json(const SvmModel& m) {
  return {{"kernel", to_json(m.kernel)},
          {"c", m.c},
          {"bias", m.bias},
          {"labels", {m.labels.first, m.labels.second}},
          {"dual_coeffs", m.dual_coeffs},
          {"support_vectors", matrix_json(m.support_vectors)}};
}

SvmModel svm_from_json(const json& j) {
  SvmModel m;
  m.kernel = kernel_from_json(j.at("kernel"));
  if (const auto* rbf = std::get_if<RbfKernel>(&m.kernel); rbf && !rbf->gamma) {
    throw Error(ErrorCode::SchemaError, "trained model must carry a resolved gamma");
  }
  m.c = j.at("c").get<double>();
  m.bias = j.at("bias").get<double>();
  const auto labels = j.at("labels").get<std::vector<std::string>>();
  if (labels.size() != 2) throw Error(ErrorCode::SchemaError, "labels must have two entries");
  m.labels = {labels[0], labels[1]};
  m.dual_coeffs = j.at("dual_coeffs").get<std::vector<double>>();
  const auto& sv = j.at("support_vectors");
  if (!sv.is_array() || sv.empty()) throw Error(ErrorCode::SchemaError, "model has no support vectors");
  m.support_vectors = matrix_from_json(sv, sv.front().size());
  if (m.support_vectors.rows() != m.dual_coeffs.size() || m.support_vectors.cols() == 0) {
    throw Error(ErrorCode::SchemaError, "support vectors and coefficients disagree");
  }
  return m;
}

json to_json(const MulticlassSvmModel& m) {
  json models = json::array();
  for (const auto& b : m.models) models.push_back(to_json(b));
  return {{"class_order", class_codes(m.class_order)}, {"models", models}};
}

MulticlassSvmModel multiclass_from_json(const json& j) {
  MulticlassSvmModel m;
  m.class_order = class_ids_from_json(j.at("class_order"));
  for (const auto& b : j.at("models")) m.models.push_back(svm_from_json(b));
  if (m.class_order.size() < 2 || m.models.size() != m.class_order.size()) {
    throw Error(ErrorCode::SchemaError, "multiclass model needs one binary model per class");
  }
  return m;
}

json model_to_json(const ModelDocument& doc) {
  json out;
  out["format_version"] = kModelFormatVersion;
  out["class_order"] = class_codes({0, 1, 2, 3, 4, 5});
  out["metadata"] = doc.metadata;
  if (const auto* s = std::get_if<SingleStageModel>(&doc.model)) {
    out["mode"] = "single";
    out["feature_config"] = to_json(s->feature_config);
    out["pca"] = to_json(s->pca);
    out["svm"] = to_json(s->classifier);
  } else {
    const auto& d = std::get<DualStageModel>(doc.model);
    out["mode"] = "dual";
    out["feature_config"] = to_json(d.feature_config);
    out["stage1"] = {{"pca", to_json(d.stage1_pca)}, {"svm", to_json(d.stage1)}};
    out["stage2_power"] = group_stage_json(d.power);
    out["stage2_precision"] = group_stage_json(d.precision);
  }
  return out;
}

ModelDocument model_from_json(const json& j) {
  return schema_guard([&] {
    if (!j.is_object()) throw Error(ErrorCode::SchemaError, "model document must be an object");
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorCode::VersionMismatch, "model format_version " + std::to_string(version) +
                                                  " is not supported (expected " +
                                                  std::to_string(kModelFormatVersion) + ")");
    }
    ModelDocument doc;
    doc.metadata = j.value("metadata", json::object());
    const auto mode = j.at("mode").get<std::string>();
    const auto cfg = feature_config_from_json(j.at("feature_config"));
    const std::size_t d = cfg.dimension();
    auto check_pca = [&](const PcaModel& p) {
      if (p.input_dim() != d) throw Error(ErrorCode::SchemaError, "PCA input dimension != feature layout");
    };
    auto check_svm = [&](const SvmModel& s, const PcaModel& p) {
      if (s.support_vectors.cols() != p.output_dim()) {
        throw Error(ErrorCode::SchemaError, "SVM dimension != PCA output dimension");
      }
    };
    if (mode == "single") {
      SingleStageModel m;
      m.feature_config = cfg;
      m.pca = pca_from_json(j.at("pca"));
      m.classifier = multiclass_from_json(j.at("svm"));
      check_pca(m.pca);
      for (const auto& b : m.classifier.models) check_svm(b, m.pca);
      doc.model = std::move(m);
    } else if (mode == "dual") {
      DualStageModel m;
      m.feature_config = cfg;
      m.stage1_pca = pca_from_json(j.at("stage1").at("pca"));
      m.stage1 = svm_from_json(j.at("stage1").at("svm"));
      m.power = group_stage_from_json(j.at("stage2_power"));
      m.precision = group_stage_from_json(j.at("stage2_precision"));
      check_pca(m.stage1_pca);
      check_svm(m.stage1, m.stage1_pca);
      for (const auto* st : {&m.power, &m.precision}) {
        check_pca(st->pca);
        for (const auto& b : st->classifier.models) check_svm(b, st->pca);
      }
      for (int id : m.power.classifier.class_order)
        if (group_of(static_cast<Activity>(id)) != Group::Power)
          throw Error(ErrorCode::SchemaError, "power stage holds a precision class");
      for (int id : m.precision.classifier.class_order)
        if (group_of(static_cast<Activity>(id)) != Group::Precision)
          throw Error(ErrorCode::SchemaError, "precision stage holds a power class");
      doc.model = std::move(m);
    } else {
      throw Error(ErrorCode::SchemaError, "mode must be 'single' or 'dual'");
    }
    return doc;
  });
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

void save_model(const ModelDocument& doc, const std::filesystem::path& path) {
  detail::write_file(path, dump_json(model_to_json(doc)));
}

void save_model(const Model& model, const std::filesystem::path& path) {
  save_model(ModelDocument{model, json::object()}, path);
}

ModelDocument parse_model(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("model file is not valid JSON: ") + e.what());
  }
  return model_from_json(j);
}

ModelDocument load_model(const std::filesystem::path& path) {
  return parse_model(detail::read_file(path));
}

json to_json(const EvalReport& r) {
  json confusion = json::array();
  for (const auto& row : r.confusion) confusion.push_back(std::vector<std::size_t>(row.begin(), row.end()));
  json out = {{"format_version", kReportFormatVersion},
              {"mode", r.mode},
              {"class_order", class_codes({0, 1, 2, 3, 4, 5})},
              {"confusion", confusion},
              {"total", r.total},
              {"correct", r.correct},
              {"accuracy", r.accuracy}};
  if (r.dual) {
    out["stages"] = {{"stage1", accuracy_json(r.dual->stage1)},
                     {"power_routed", accuracy_json(r.dual->power_routed)},
                     {"precision_routed", accuracy_json(r.dual->precision_routed)},
                     {"power_all", accuracy_json(r.dual->power_all)},
                     {"precision_all", accuracy_json(r.dual->precision_all)}};
  }
  return out;
}

EvalReport report_from_json(const json& j) {
  return schema_guard([&] {
    if (j.at("format_version").get<int>() != kReportFormatVersion) {
      throw Error(ErrorCode::VersionMismatch, "unsupported report format_version");
    }
    EvalReport r;
    r.mode = j.at("mode").get<std::string>();
    const auto rows = j.at("confusion").get<std::vector<std::vector<std::size_t>>>();
    if (rows.size() != kNumActivities) throw Error(ErrorCode::SchemaError, "confusion must be 6x6");
    std::size_t sum = 0, trace = 0;
    for (std::size_t i = 0; i < kNumActivities; ++i) {
      if (rows[i].size() != kNumActivities) throw Error(ErrorCode::SchemaError, "confusion must be 6x6");
      for (std::size_t k = 0; k < kNumActivities; ++k) {
        r.confusion[i][k] = rows[i][k];
        sum += rows[i][k];
        if (i == k) trace += rows[i][k];
      }
    }
    r.total = j.at("total").get<std::size_t>();
    r.correct = j.at("correct").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    if (sum != r.total || trace != r.correct || sum == 0 ||
        r.accuracy != static_cast<double>(trace) / static_cast<double>(sum)) {
      throw Error(ErrorCode::SchemaError, "confusion matrix and accuracy disagree");
    }
    if (j.contains("stages")) {
      const auto& s = j.at("stages");
      r.dual = DualStageStats{accuracy_from_json(s.at("stage1")), accuracy_from_json(s.at("power_routed")),
                              accuracy_from_json(s.at("precision_routed")),
                              accuracy_from_json(s.at("power_all")),
                              accuracy_from_json(s.at("precision_all"))};
    }
    return r;
  });
}

}  // namespace emgds
