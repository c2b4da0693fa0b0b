#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emgds/data.hpp"

namespace emgds {

/// Time-domain feature families in their fixed per-channel order.
enum class FeatureFamily { Mav, Std, Rms, Ssc, Wl, Ar, Skew, Kurt };

inline constexpr std::array<FeatureFamily, 8> kAllFamilies = {
    FeatureFamily::Mav, FeatureFamily::Std, FeatureFamily::Rms,  FeatureFamily::Ssc,
    FeatureFamily::Wl,  FeatureFamily::Ar,  FeatureFamily::Skew, FeatureFamily::Kurt};

std::string_view family_name(FeatureFamily f) noexcept;
FeatureFamily parse_family(std::string_view name);

struct FeatureConfig {
  int ar_order = 4;
  std::vector<FeatureFamily> include{kAllFamilies.begin(), kAllFamilies.end()};

  /// Sorts `include` into the canonical family order and drops duplicates.
  FeatureConfig normalized() const;
  /// Column labels: ch1_mav, ch1_std, ..., ch1_ar1..ch1_arP, ..., ch2_kurt.
  std::vector<std::string> layout() const;
  std::size_t dimension() const;
  void validate() const;

  bool operator==(const FeatureConfig&) const = default;
};

struct FeatureVector {
  std::vector<double> values;
  std::vector<std::string> layout;
  std::optional<Activity> label;
  RecordingKey key;
  std::size_t window_index = 0;
};

struct ArFit {
  std::vector<double> coeffs;  // a_1..a_p, prediction x_n = sum a_k x_{n-k}
  double residual_variance = 0.0;
};

// Per-segment features. Length preconditions are enforced with SegmentTooShort.

/// Mean of absolute values.
double mav(std::span<const double> x);
/// Sample standard deviation (n - 1 denominator).
double std_dev(std::span<const double> x);
double rms(std::span<const double> x);
/// Number of strict local extrema (minima and maxima); plateaus do not count.
std::size_t ssc(std::span<const double> x);
double waveform_length(std::span<const double> x);
/// Yule-Walker fit via Levinson-Durbin on the biased, non-demeaned
/// autocorrelation. Throws DegenerateSegment when r(0) = 0 or the recursion
/// breaks down.
ArFit ar_coeffs(std::span<const double> x, int order);
/// Population skewness m3 / m2^(3/2).
double skewness(std::span<const double> x);
/// Population (non-excess) kurtosis m4 / m2^2.
double kurtosis(std::span<const double> x);

/// Feature values of one segment for the families in `cfg`.
std::vector<double> segment_features(std::span<const double> x, const FeatureConfig& cfg);

/// One labeled vector per window position: channel-1 features then channel-2.
std::vector<FeatureVector> extract(const Recording& rec, const FeatureConfig& cfg = {},
                                   const Window& window = FullWindow{});
std::vector<FeatureVector> extract(const Corpus& corpus, const FeatureConfig& cfg = {},
                                   const Window& window = FullWindow{});

// --- Feature CSV ------------------------------------------------------------

struct FeatureTable {
  FeatureConfig config;
  std::vector<FeatureVector> rows;
};

std::string format_features_csv(const FeatureTable& table);
void write_features_csv(const FeatureTable& table, const std::filesystem::path& path);
/// Parses the export format back, recovering the FeatureConfig from the
/// layout labels.
FeatureTable parse_features_csv(std::string_view text, const std::string& source_name = "<memory>");
FeatureTable read_features_csv(const std::filesystem::path& path);

/// Infers the FeatureConfig that produces `layout`; throws LayoutMismatch.
FeatureConfig config_from_layout(std::span<const std::string> layout);

}  // namespace emgds
