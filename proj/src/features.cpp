#include "emgds/features.hpp"

#include <algorithm>
#include <cmath>

#include "csv_util.hpp"
#include "emgds/error.hpp"

namespace emgds {

namespace {

void require_length(std::span<const double> x, std::size_t min_len, std::string_view what) {
  if (x.size() < min_len) {
    throw Error(ErrorCode::SegmentTooShort, std::string(what) + " needs at least " +
                                                std::to_string(min_len) + " samples, got " +
                                                std::to_string(x.size()));
  }
}

double mean_of(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Central moments m2, m3, m4 with the population (1/n) normalization.
struct Moments {
  double m2, m3, m4;
};

Moments central_moments(std::span<const double> x) {
  const double mu = mean_of(x);
  double s2 = 0.0, s3 = 0.0, s4 = 0.0;
  for (double v : x) {
    const double d = v - mu;
    const double d2 = d * d;
    s2 += d2;
    s3 += d2 * d;
    s4 += d2 * d2;
  }
  const auto n = static_cast<double>(x.size());
  return {s2 / n, s3 / n, s4 / n};
}

Moments checked_moments(std::span<const double> x, std::string_view what) {
  require_length(x, 2, what);
  const auto m = central_moments(x);
  if (!(m.m2 > 0.0)) {
    throw Error(ErrorCode::DegenerateSegment, std::string(what) + " undefined for zero variance");
  }
  return m;
}

}  // namespace

std::string_view family_name(FeatureFamily f) noexcept {
  switch (f) {
    case FeatureFamily::Mav: return "mav";
    case FeatureFamily::Std: return "std";
    case FeatureFamily::Rms: return "rms";
    case FeatureFamily::Ssc: return "ssc";
    case FeatureFamily::Wl: return "wl";
    case FeatureFamily::Ar: return "ar";
    case FeatureFamily::Skew: return "skew";
    case FeatureFamily::Kurt: return "kurt";
  }
  return "?";
}

FeatureFamily parse_family(std::string_view name) {
  for (auto f : kAllFamilies) {
    if (family_name(f) == name) return f;
  }
  throw Error(ErrorCode::InvalidConfig, "unknown feature family '" + std::string(name) + "'");
}

double mav(std::span<const double> x) {
  require_length(x, 1, "mav");
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s / static_cast<double>(x.size());
}

double std_dev(std::span<const double> x) {
  require_length(x, 2, "std_dev");
  const double mu = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

double rms(std::span<const double> x) {
  require_length(x, 1, "rms");
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

std::size_t ssc(std::span<const double> x) {
  require_length(x, 3, "ssc");
  std::size_t count = 0;
  for (std::size_t k = 1; k + 1 < x.size(); ++k) {
    if ((x[k] - x[k - 1]) * (x[k] - x[k + 1]) > 0.0) ++count;
  }
  return count;
}

double waveform_length(std::span<const double> x) {
  require_length(x, 2, "waveform_length");
  double s = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) s += std::abs(x[k] - x[k - 1]);
  return s;
}

ArFit ar_coeffs(std::span<const double> x, int order) {
  if (order < 1) throw Error(ErrorCode::InvalidConfig, "AR order must be >= 1");
  const auto p = static_cast<std::size_t>(order);
  require_length(x, p + 1, "ar_coeffs");

  const auto n = x.size();
  std::vector<double> r(p + 1, 0.0);
  for (std::size_t lag = 0; lag <= p; ++lag) {
    double s = 0.0;
    for (std::size_t i = lag; i < n; ++i) s += x[i] * x[i - lag];
    r[lag] = s / static_cast<double>(n);
  }
  if (!(r[0] > 0.0)) {
    throw Error(ErrorCode::DegenerateSegment, "zero autocorrelation at lag 0");
  }

  // Levinson-Durbin.
  std::vector<double> a(p + 1, 0.0), prev(p + 1, 0.0);
  double err = r[0];
  for (std::size_t m = 1; m <= p; ++m) {
    double acc = r[m];
    for (std::size_t k = 1; k < m; ++k) acc -= a[k] * r[m - k];
    const double refl = acc / err;
    prev = a;
    a[m] = refl;
    for (std::size_t k = 1; k < m; ++k) a[k] = prev[k] - refl * prev[m - k];
    err *= (1.0 - refl * refl);
    if (!(err > 0.0) || !std::isfinite(err)) {
      throw Error(ErrorCode::DegenerateSegment, "Levinson-Durbin recursion broke down at order " +
                                                    std::to_string(m));
    }
  }
  return {std::vector<double>(a.begin() + 1, a.end()), err};
}

double skewness(std::span<const double> x) {
  const auto m = checked_moments(x, "skewness");
  return m.m3 / std::pow(m.m2, 1.5);
}

double kurtosis(std::span<const double> x) {
  const auto m = checked_moments(x, "kurtosis");
  return m.m4 / (m.m2 * m.m2);
}

// --- Config -----------------------------------------------------------------

FeatureConfig FeatureConfig::normalized() const {
  FeatureConfig out = *this;
  std::sort(out.include.begin(), out.include.end());
  out.include.erase(std::unique(out.include.begin(), out.include.end()), out.include.end());
  return out;
}

void FeatureConfig::validate() const {
  if (include.empty()) throw Error(ErrorCode::InvalidConfig, "feature config includes no family");
  const bool has_ar = std::find(include.begin(), include.end(), FeatureFamily::Ar) != include.end();
  if (has_ar && ar_order < 1) throw Error(ErrorCode::InvalidConfig, "AR order must be >= 1");
}

std::vector<std::string> FeatureConfig::layout() const {
  const auto cfg = normalized();
  std::vector<std::string> out;
  for (int ch = 1; ch <= 2; ++ch) {
    const std::string prefix = "ch" + std::to_string(ch) + "_";
    for (auto f : cfg.include) {
      if (f == FeatureFamily::Ar) {
        for (int k = 1; k <= cfg.ar_order; ++k) out.push_back(prefix + "ar" + std::to_string(k));
      } else {
        out.push_back(prefix + std::string(family_name(f)));
      }
    }
  }
  return out;
}

std::size_t FeatureConfig::dimension() const {
  const auto cfg = normalized();
  std::size_t per_channel = 0;
  for (auto f : cfg.include) {
    per_channel += f == FeatureFamily::Ar ? static_cast<std::size_t>(std::max(cfg.ar_order, 0)) : 1;
  }
  return 2 * per_channel;
}

FeatureConfig config_from_layout(std::span<const std::string> layout) {
  FeatureConfig cfg;
  cfg.include.clear();
  cfg.ar_order = 0;
  for (const auto& label : layout) {
    if (!label.starts_with("ch1_")) continue;
    const std::string_view name = std::string_view(label).substr(4);
    if (name.starts_with("ar") && name.size() > 2) {
      if (cfg.ar_order == 0) cfg.include.push_back(FeatureFamily::Ar);
      ++cfg.ar_order;
      continue;
    }
    try {
      cfg.include.push_back(parse_family(name));
    } catch (const Error&) {
      throw Error(ErrorCode::LayoutMismatch, "unknown feature column '" + label + "'");
    }
  }
  if (cfg.ar_order == 0) cfg.ar_order = FeatureConfig{}.ar_order;
  if (cfg.include.empty()) throw Error(ErrorCode::LayoutMismatch, "no feature columns");
  const auto expected = cfg.layout();
  if (!std::equal(expected.begin(), expected.end(), layout.begin(), layout.end())) {
    throw Error(ErrorCode::LayoutMismatch, "feature columns are not in the canonical layout");
  }
  return cfg;
}

// --- Extraction -------------------------------------------------------------

std::vector<double> segment_features(std::span<const double> x, const FeatureConfig& cfg_in) {
  const auto cfg = cfg_in.normalized();
  std::vector<double> out;
  out.reserve(cfg.dimension() / 2);
  for (auto f : cfg.include) {
    switch (f) {
      case FeatureFamily::Mav: out.push_back(mav(x)); break;
      case FeatureFamily::Std: out.push_back(std_dev(x)); break;
      case FeatureFamily::Rms: out.push_back(rms(x)); break;
      case FeatureFamily::Ssc: out.push_back(static_cast<double>(ssc(x))); break;
      case FeatureFamily::Wl: out.push_back(waveform_length(x)); break;
      case FeatureFamily::Ar: {
        const auto fit = ar_coeffs(x, cfg.ar_order);
        out.insert(out.end(), fit.coeffs.begin(), fit.coeffs.end());
        break;
      }
      case FeatureFamily::Skew: out.push_back(skewness(x)); break;
      case FeatureFamily::Kurt: out.push_back(kurtosis(x)); break;
    }
  }
  return out;
}

std::vector<FeatureVector> extract(const Recording& rec, const FeatureConfig& cfg_in,
                                   const Window& window) {
  const auto cfg = cfg_in.normalized();
  cfg.validate();
  const auto segments = segment(rec, window);
  const auto layout = cfg.layout();
  std::vector<FeatureVector> out;
  out.reserve(segments[0].size());
  for (std::size_t w = 0; w < segments[0].size(); ++w) {
    FeatureVector fv;
    fv.layout = layout;
    fv.label = rec.activity;
    fv.key = rec.key();
    fv.window_index = w;
    fv.values.reserve(layout.size());
    for (int c = 0; c < 2; ++c) {
      try {
        const auto vals = segment_features(segments[c][w].samples, cfg);
        fv.values.insert(fv.values.end(), vals.begin(), vals.end());
      } catch (const Error& e) {
        throw Error(e.code(), rec.subject + "/" + activity_code(rec.activity) + "/" +
                                  std::to_string(rec.repetition) + " channel " +
                                  std::to_string(c + 1) + " window " + std::to_string(w) + ": " +
                                  e.what());
      }
    }
    out.push_back(std::move(fv));
  }
  return out;
}

std::vector<FeatureVector> extract(const Corpus& corpus, const FeatureConfig& cfg,
                                   const Window& window) {
  std::vector<FeatureVector> out;
  for (const auto& rec : corpus.recordings) {
    auto v = extract(rec, cfg, window);
    out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  }
  return out;
}

// --- CSV --------------------------------------------------------------------

namespace {
constexpr std::string_view kMetaHeader = "subject,activity,repetition,window_index";
}

std::string format_features_csv(const FeatureTable& table) {
  const auto layout = table.config.layout();
  std::string out(kMetaHeader);
  for (const auto& l : layout) {
    out += ',';
    out += l;
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.values.size() != layout.size()) {
      throw Error(ErrorCode::LayoutMismatch, "row dimension differs from the table layout");
    }
    out += row.key.subject;
    out += ',';
    out += row.label ? activity_code(*row.label) : activity_code(row.key.activity);
    out += ',';
    out += std::to_string(row.key.repetition);
    out += ',';
    out += std::to_string(row.window_index);
    for (double v : row.values) {
      out += ',';
      detail::append_double(out, v);
    }
    out += '\n';
  }
  return out;
}

void write_features_csv(const FeatureTable& table, const std::filesystem::path& path) {
  detail::write_file(path, format_features_csv(table));
}

FeatureTable parse_features_csv(std::string_view text, const std::string& source_name) {
  FeatureTable table;
  std::vector<std::string> layout;
  bool header_seen = false;
  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto where = source_name + ":" + std::to_string(line_no);
    if (!header_seen) {
      const auto f = detail::split_fields(line);
      if (f.size() < 5 || detail::trim(line).substr(0, kMetaHeader.size()) != kMetaHeader) {
        throw Error(ErrorCode::MalformedHeader, where + ": expected '" + std::string(kMetaHeader) +
                                                    ",<features...>'");
      }
      for (std::size_t i = 4; i < f.size(); ++i) layout.emplace_back(detail::trim(f[i]));
      try {
        table.config = config_from_layout(layout);
      } catch (const Error& e) {
        throw Error(ErrorCode::MalformedHeader, where + ": " + e.what());
      }
      header_seen = true;
      return;
    }
    if (detail::trim(line).empty()) return;
    const auto f = detail::split_fields(line);
    if (f.size() != layout.size() + 4) {
      throw Error(ErrorCode::MalformedRow, where + ": expected " + std::to_string(layout.size() + 4) +
                                               " fields, got " + std::to_string(f.size()));
    }
    FeatureVector fv;
    fv.key.subject = std::string(detail::trim(f[0]));
    try {
      fv.key.activity = parse_activity(f[1]);
    } catch (const Error&) {
      throw Error(ErrorCode::UnknownActivityCode, where + ": '" + std::string(f[1]) + "'");
    }
    fv.label = fv.key.activity;
    if (!detail::parse_int(f[2], fv.key.repetition) || fv.key.repetition < 1) {
      throw Error(ErrorCode::MalformedRow, where + ": bad repetition");
    }
    if (!detail::parse_int(f[3], fv.window_index)) {
      throw Error(ErrorCode::MalformedRow, where + ": bad window_index");
    }
    fv.layout = layout;
    fv.values.resize(layout.size());
    for (std::size_t i = 0; i < layout.size(); ++i) {
      if (!detail::parse_double(f[i + 4], fv.values[i]) || !std::isfinite(fv.values[i])) {
        throw Error(ErrorCode::MalformedRow, where + ": bad value in column '" + layout[i] + "'");
      }
    }
    table.rows.push_back(std::move(fv));
  });
  if (!header_seen) throw Error(ErrorCode::MalformedHeader, source_name + ": missing header");
  if (table.rows.empty()) throw Error(ErrorCode::EmptyCorpus, source_name + ": no data rows");
  return table;
}

FeatureTable read_features_csv(const std::filesystem::path& path) {
  return parse_features_csv(detail::read_file(path), path.string());
}

}  // namespace emgds
