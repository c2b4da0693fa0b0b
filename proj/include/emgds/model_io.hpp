#pragma once

#include <filesystem>
#include <json.hpp>

#include "emgds/grouping.hpp"
#include "emgds/pipeline.hpp"

namespace emgds {

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

nlohmann::json to_json(const FeatureConfig& cfg);
FeatureConfig feature_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const KernelSpec& kernel);
KernelSpec kernel_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PcaModel& model);
PcaModel pca_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SvmModel& model);
SvmModel svm_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MulticlassSvmModel& model);
MulticlassSvmModel multiclass_from_json(const nlohmann::json& j);

/// A model plus free-form metadata (split descriptor, hyperparameters, ...).
struct ModelDocument {
  Model model;
  nlohmann::json metadata = nlohmann::json::object();
};

/// Versioned model document: format_version, mode, class_order,
/// feature_config, the PCA/SVM blocks of the mode, and metadata.
nlohmann::json model_to_json(const ModelDocument& doc);
/// Throws VersionMismatch for an unknown format_version and SchemaError for
/// anything structurally wrong.
ModelDocument model_from_json(const nlohmann::json& j);

void save_model(const ModelDocument& doc, const std::filesystem::path& path);
void save_model(const Model& model, const std::filesystem::path& path);
ModelDocument load_model(const std::filesystem::path& path);
ModelDocument parse_model(std::string_view text);

nlohmann::json to_json(const EvalReport& report);
/// Throws SchemaError when the document lacks a field or breaks the
/// confusion-matrix conservation rules.
EvalReport report_from_json(const nlohmann::json& j);

/// Pretty-printed JSON text with a trailing newline.
std::string dump_json(const nlohmann::json& j);

}  // namespace emgds
