#include "emgds/data.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <unordered_map>

#include "csv_util.hpp"
#include "emgds/error.hpp"

namespace emgds {

namespace {

constexpr std::string_view kCodes = "PLTHSC";
constexpr std::array<std::string_view, 6> kNames = {"palmar", "lateral", "tip",
                                                    "hook",   "spherical", "cylindrical"};

}  // namespace

char activity_code(Activity a) noexcept { return kCodes[static_cast<std::size_t>(a)]; }

std::string_view activity_name(Activity a) noexcept { return kNames[static_cast<std::size_t>(a)]; }

Activity parse_activity(std::string_view code) {
  code = detail::trim(code);
  if (code.size() == 1) {
    const auto pos = kCodes.find(code.front());
    if (pos != std::string_view::npos) return static_cast<Activity>(pos);
  }
  throw Error(ErrorCode::UnknownActivityCode, "'" + std::string(code) + "'");
}

Group group_of(Activity a) noexcept {
  switch (a) {
    case Activity::C:
    case Activity::H:
    case Activity::S:
      return Group::Power;
    case Activity::L:
    case Activity::T:
    case Activity::P:
      return Group::Precision;
  }
  return Group::Precision;
}

std::string_view group_name(Group g) noexcept {
  return g == Group::Power ? "power" : "precision";
}

void Recording::validate() const {
  if (!(rate_hz > 0.0)) throw Error(ErrorCode::InvalidConfig, "rate_hz must be positive");
  if (repetition < 1) throw Error(ErrorCode::InvalidConfig, "repetition must be positive");
  if (channels[0].size() != channels[1].size()) {
    throw Error(ErrorCode::RaggedChannels, subject + "/" + activity_code(activity) + "/" +
                                               std::to_string(repetition) + ": channel lengths " +
                                               std::to_string(channels[0].size()) + " vs " +
                                               std::to_string(channels[1].size()));
  }
  if (channels[0].size() < 2) {
    throw Error(ErrorCode::InvalidConfig, "recording needs at least 2 samples per channel");
  }
}

// --- Synthetic corpus --------------------------------------------------------

void SynthConfig::validate() const {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (subjects < 1) bad("subjects must be >= 1");
  if (reps_per_activity < 2) bad("reps_per_activity must be >= 2 so a train/test split exists");
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) bad("rate_hz must be positive");
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) bad("duration_s must be positive");
  if (!(power_rms_scale > 1.0) || !std::isfinite(power_rms_scale)) bad("power_rms_scale must be > 1");
  const double n = std::floor(rate_hz * duration_s);
  if (n < 16.0) bad("rate_hz * duration_s must give at least 16 samples");
}

namespace {

// Pole radius and angle (radians per sample at 500 Hz) of the AR(2) shaping
// filter for one channel, plus the channel's relative envelope level.
struct ChannelSignature {
  double radius;
  double angle;
  double level;
};

struct ActivitySignature {
  std::array<ChannelSignature, 2> ch;
};

// Precision and power grasps reuse the same three level patterns, so the
// group-mean envelope ratio is exactly the configured power scale.
constexpr std::array<ActivitySignature, 6> kSignatures = {{
    /* P */ {{{{0.80, 0.45, 0.946}, {0.60, 1.10, 0.666}}}},
    /* L */ {{{{0.65, 1.00, 0.701}, {0.82, 0.55, 0.946}}}},
    /* T */ {{{{0.75, 1.45, 0.820}, {0.70, 0.85, 0.820}}}},
    /* H */ {{{{0.82, 0.60, 0.701}, {0.65, 1.35, 0.946}}}},
    /* S */ {{{{0.60, 1.20, 0.820}, {0.78, 0.40, 0.820}}}},
    /* C */ {{{{0.72, 0.90, 0.946}, {0.80, 1.60, 0.666}}}},
}};

// Per-repetition and per-subject variability.
constexpr double kRepLevelSigma = 0.05;   // log-normal sigma of envelope level
constexpr double kRepRadiusSigma = 0.15;  // additive on pole radius
constexpr double kRepAngleSigma = 0.28;   // relative on pole angle
constexpr double kSubjectGainSigma = 0.05;
constexpr double kRestLevel = 0.08;  // envelope floor outside the contraction

// Stationary variance of x_n = a1 x_{n-1} + a2 x_{n-2} + e_n with unit e_n.
double ar2_variance(double a1, double a2) {
  return (1.0 - a2) / ((1.0 + a2) * ((1.0 - a2) * (1.0 - a2) - a1 * a1));
}

// Contraction envelope: rest, raised-cosine ramp up, plateau, ramp down, rest.
double envelope_shape(double frac) {
  constexpr double on = 0.12, ramp = 0.10, off = 0.88;
  double w = 0.0;
  if (frac >= on && frac < on + ramp) {
    w = 0.5 - 0.5 * std::cos(std::numbers::pi * (frac - on) / ramp);
  } else if (frac >= on + ramp && frac <= off - ramp) {
    w = 1.0;
  } else if (frac > off - ramp && frac <= off) {
    w = 0.5 + 0.5 * std::cos(std::numbers::pi * (frac - (off - ramp)) / ramp);
  }
  return kRestLevel + (1.0 - kRestLevel) * w;
}

std::vector<double> synth_channel(std::mt19937_64& rng, std::size_t n, double rate_hz,
                                  const ChannelSignature& sig, double level) {
  std::normal_distribution<double> normal(0.0, 1.0);
  const double radius = std::clamp(sig.radius + kRepRadiusSigma * normal(rng), 0.05, 0.95);
  // Angles are specified at 500 Hz; keep the spectral shape in Hz when the
  // rate changes.
  double angle = sig.angle * (500.0 / rate_hz) * (1.0 + kRepAngleSigma * normal(rng));
  angle = std::clamp(angle, 0.02, std::numbers::pi - 0.02);
  const double a1 = 2.0 * radius * std::cos(angle);
  const double a2 = -radius * radius;
  const double norm = 1.0 / std::sqrt(ar2_variance(a1, a2));

  constexpr std::size_t kBurnIn = 200;
  std::vector<double> out(n);
  double x1 = 0.0, x2 = 0.0;
  for (std::size_t i = 0; i < kBurnIn + n; ++i) {
    const double x = a1 * x1 + a2 * x2 + normal(rng);
    x2 = x1;
    x1 = x;
    if (i >= kBurnIn) {
      const std::size_t k = i - kBurnIn;
      const double frac = (static_cast<double>(k) + 0.5) / static_cast<double>(n);
      out[k] = level * envelope_shape(frac) * norm * x;
    }
  }
  return out;
}

}  // namespace

Corpus synth_corpus(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = static_cast<std::size_t>(std::floor(cfg.rate_hz * cfg.duration_s));

  Corpus corpus;
  corpus.provenance = Synthetic{cfg.seed};
  corpus.recordings.reserve(static_cast<std::size_t>(cfg.subjects) * kNumActivities *
                            static_cast<std::size_t>(cfg.reps_per_activity));
  for (int s = 0; s < cfg.subjects; ++s) {
    const std::string subject = "subj" + std::to_string(s + 1);
    std::array<double, 2> gain{};
    for (auto& g : gain) g = std::exp(kSubjectGainSigma * normal(rng));

    for (Activity a : kActivities) {
      const auto& sig = kSignatures[static_cast<std::size_t>(a)];
      const double group_scale = group_of(a) == Group::Power ? cfg.power_rms_scale : 1.0;
      for (int r = 1; r <= cfg.reps_per_activity; ++r) {
        Recording rec;
        rec.subject = subject;
        rec.activity = a;
        rec.repetition = r;
        rec.rate_hz = cfg.rate_hz;
        for (int c = 0; c < 2; ++c) {
          const double level = group_scale * sig.ch[c].level * gain[c] *
                               std::exp(kRepLevelSigma * normal(rng));
          rec.channels[c] = synth_channel(rng, n, cfg.rate_hz, sig.ch[c], level);
        }
        corpus.recordings.push_back(std::move(rec));
      }
    }
  }
  return corpus;
}

// --- CSV -------------------------------------------------------------------

Corpus parse_corpus_csv(std::string_view text, double rate_hz, std::string source_name) {
  if (!(rate_hz > 0.0)) throw Error(ErrorCode::InvalidConfig, "rate_hz must be positive");

  struct Sample {
    std::size_t index;
    std::optional<double> ch1, ch2;
    std::size_t line;
  };
  std::vector<RecordingKey> order;
  std::map<RecordingKey, std::vector<Sample>> groups;
  bool header_seen = false;

  detail::for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (!header_seen) {
      if (detail::trim(line) != kCorpusCsvHeader) {
        throw Error(ErrorCode::MalformedHeader, source_name + ":" + std::to_string(line_no) +
                                                    ": expected '" + std::string(kCorpusCsvHeader) +
                                                    "'");
      }
      header_seen = true;
      return;
    }
    if (detail::trim(line).empty()) return;
    const auto where = source_name + ":" + std::to_string(line_no);
    const auto f = detail::split_fields(line);
    if (f.size() != 6) {
      throw Error(ErrorCode::MalformedRow, where + ": expected 6 fields, got " +
                                               std::to_string(f.size()));
    }
    RecordingKey key;
    key.subject = std::string(detail::trim(f[0]));
    if (key.subject.empty()) throw Error(ErrorCode::MalformedRow, where + ": empty subject");
    try {
      key.activity = parse_activity(f[1]);
    } catch (const Error& e) {
      throw Error(ErrorCode::UnknownActivityCode, where + ": '" + std::string(f[1]) + "'");
    }
    if (!detail::parse_int(f[2], key.repetition) || key.repetition < 1) {
      throw Error(ErrorCode::MalformedRow, where + ": bad repetition '" + std::string(f[2]) + "'");
    }
    Sample s{};
    s.line = line_no;
    if (!detail::parse_int(f[3], s.index)) {
      throw Error(ErrorCode::MalformedRow, where + ": bad sample_index '" + std::string(f[3]) + "'");
    }
    auto channel = [&](std::string_view field, std::optional<double>& dst) {
      if (detail::trim(field).empty()) return;
      double v = 0.0;
      if (!detail::parse_double(field, v) || !std::isfinite(v)) {
        throw Error(ErrorCode::MalformedRow, where + ": bad sample value '" + std::string(field) + "'");
      }
      dst = v;
    };
    channel(f[4], s.ch1);
    channel(f[5], s.ch2);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(s);
  });

  if (!header_seen) throw Error(ErrorCode::MalformedHeader, source_name + ": missing header");
  if (order.empty()) throw Error(ErrorCode::EmptyCorpus, source_name + ": no data rows");

  Corpus corpus;
  corpus.provenance = FromFile{std::move(source_name)};
  corpus.recordings.reserve(order.size());
  for (const auto& key : order) {
    auto& samples = groups.at(key);
    std::sort(samples.begin(), samples.end(),
              [](const Sample& a, const Sample& b) { return a.index < b.index; });
    Recording rec;
    rec.subject = key.subject;
    rec.activity = key.activity;
    rec.repetition = key.repetition;
    rec.rate_hz = rate_hz;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].index != i) {
        throw Error(ErrorCode::MalformedRow,
                    std::get<FromFile>(corpus.provenance).path + ":" +
                        std::to_string(samples[i].line) + ": sample_index " +
                        std::to_string(samples[i].index) + " breaks the contiguous 0-based sequence");
      }
      if (samples[i].ch1) rec.channels[0].push_back(*samples[i].ch1);
      if (samples[i].ch2) rec.channels[1].push_back(*samples[i].ch2);
    }
    if (rec.channels[0].size() != rec.channels[1].size()) {
      throw Error(ErrorCode::RaggedChannels,
                  key.subject + "/" + activity_code(key.activity) + "/" +
                      std::to_string(key.repetition) + ": ch1 has " +
                      std::to_string(rec.channels[0].size()) + " samples, ch2 has " +
                      std::to_string(rec.channels[1].size()));
    }
    rec.validate();
    corpus.recordings.push_back(std::move(rec));
  }
  return corpus;
}

Corpus ingest_csv(const std::filesystem::path& path, double rate_hz) {
  return parse_corpus_csv(detail::read_file(path), rate_hz, path.string());
}

std::string format_corpus_csv(const Corpus& corpus) {
  std::string out;
  out.reserve(64 + corpus.recordings.size() * (corpus.recordings.empty() ? 0 : corpus.recordings[0].size()) * 56);
  out += kCorpusCsvHeader;
  out += '\n';
  for (const auto& rec : corpus.recordings) {
    rec.validate();
    const std::string prefix =
        rec.subject + "," + activity_code(rec.activity) + "," + std::to_string(rec.repetition) + ",";
    for (std::size_t i = 0; i < rec.size(); ++i) {
      out += prefix;
      out += std::to_string(i);
      out += ',';
      detail::append_double(out, rec.channels[0][i]);
      out += ',';
      detail::append_double(out, rec.channels[1][i]);
      out += '\n';
    }
  }
  return out;
}

void write_csv(const Corpus& corpus, const std::filesystem::path& path) {
  detail::write_file(path, format_corpus_csv(corpus));
}

// --- Segmentation ----------------------------------------------------------

std::array<std::vector<Segment>, 2> segment(const Recording& rec, const Window& window) {
  rec.validate();
  const std::size_t n = rec.size();
  std::size_t len = n, step = 1;
  if (const auto* sw = std::get_if<SlidingWindow>(&window)) {
    if (sw->length < 3 || sw->step < 1) {
      throw Error(ErrorCode::InvalidConfig, "sliding window needs length >= 3 and step >= 1");
    }
    if (sw->length > n) {
      throw Error(ErrorCode::WindowTooLong, "window length " + std::to_string(sw->length) +
                                                " exceeds " + std::to_string(n) + " samples");
    }
    len = sw->length;
    step = sw->step;
  } else if (n < 3) {
    throw Error(ErrorCode::SegmentTooShort, "a segment needs at least 3 samples");
  }

  const std::size_t count = (n - len) / step + 1;
  std::array<std::vector<Segment>, 2> out;
  for (int c = 0; c < 2; ++c) {
    out[c].reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
      const std::size_t off = w * step;
      Segment seg;
      seg.samples.assign(rec.channels[c].begin() + static_cast<std::ptrdiff_t>(off),
                         rec.channels[c].begin() + static_cast<std::ptrdiff_t>(off + len));
      seg.source = {rec.subject, rec.activity, rec.repetition, c, off};
      out[c].push_back(std::move(seg));
    }
  }
  return out;
}

std::string describe_window(const Window& window) {
  if (const auto* sw = std::get_if<SlidingWindow>(&window)) {
    return "sliding:" + std::to_string(sw->length) + ":" + std::to_string(sw->step);
  }
  return "full";
}

Window parse_window(std::string_view text) {
  text = detail::trim(text);
  if (text == "full") return FullWindow{};
  if (text.starts_with("sliding:")) {
    const auto parts = detail::split_fields(text.substr(8), ':');
    SlidingWindow sw;
    if (parts.size() == 2 && detail::parse_int(parts[0], sw.length) &&
        detail::parse_int(parts[1], sw.step)) {
      return sw;
    }
  }
  throw Error(ErrorCode::InvalidConfig,
              "window must be 'full' or 'sliding:<len>:<step>', got '" + std::string(text) + "'");
}

// --- Splitting -------------------------------------------------------------

namespace {

// Distinct recordings ("units"), each with the rows that belong to it, grouped
// into (subject, activity) cells. Cells are visited in key order and units
// within a cell by repetition, so the result only depends on the keys.
struct Cells {
  std::vector<std::vector<std::vector<std::size_t>>> cells;  // cell -> unit -> rows
};

Cells build_cells(std::span<const RecordingKey> rows) {
  std::map<std::pair<std::string, int>, std::map<int, std::vector<std::size_t>>> grouped;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    grouped[{rows[i].subject, activity_index(rows[i].activity)}][rows[i].repetition].push_back(i);
  }
  Cells out;
  for (auto& [cell, units] : grouped) {
    if (units.size() < 2) {
      throw Error(ErrorCode::InsufficientRepetitions,
                  "cell " + cell.first + "/" + activity_code(static_cast<Activity>(cell.second)) +
                      " has " + std::to_string(units.size()) + " repetition(s); need >= 2");
    }
    auto& dst = out.cells.emplace_back();
    for (auto& [rep, idx] : units) dst.push_back(std::move(idx));
  }
  return out;
}

void append_rows(std::vector<std::size_t>& dst, const std::vector<std::size_t>& rows) {
  dst.insert(dst.end(), rows.begin(), rows.end());
}

}  // namespace

SplitIndices holdout_split(std::span<const RecordingKey> rows, const Holdout& protocol) {
  if (!(protocol.train_fraction > 0.0 && protocol.train_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "train_fraction must lie in (0, 1)");
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyCorpus, "nothing to split");
  auto cells = build_cells(rows);
  std::mt19937_64 rng(protocol.seed);
  SplitIndices out;
  for (auto& units : cells.cells) {
    std::shuffle(units.begin(), units.end(), rng);
    const auto n = units.size();
    auto n_train = static_cast<std::size_t>(std::floor(protocol.train_fraction * static_cast<double>(n)));
    n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
    for (std::size_t u = 0; u < n; ++u) append_rows(u < n_train ? out.train : out.test, units[u]);
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

std::vector<std::vector<std::size_t>> kfold_split(std::span<const RecordingKey> rows,
                                                  const KFold& protocol) {
  if (protocol.k < 2) throw Error(ErrorCode::InvalidConfig, "k-fold needs k >= 2");
  if (rows.empty()) throw Error(ErrorCode::EmptyCorpus, "nothing to split");
  auto cells = build_cells(rows);
  std::mt19937_64 rng(protocol.seed);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(protocol.k));
  for (auto& units : cells.cells) {
    std::shuffle(units.begin(), units.end(), rng);
    for (std::size_t u = 0; u < units.size(); ++u) {
      append_rows(folds[u % folds.size()], units[u]);
    }
  }
  for (auto& f : folds) std::sort(f.begin(), f.end());
  return folds;
}

SplitIndices kfold_fold(std::span<const RecordingKey> rows, const KFold& protocol, int fold) {
  if (fold < 0 || fold >= protocol.k) {
    throw Error(ErrorCode::InvalidConfig, "fold index out of range");
  }
  auto folds = kfold_split(rows, protocol);
  SplitIndices out;
  out.test = std::move(folds[static_cast<std::size_t>(fold)]);
  for (int f = 0; f < protocol.k; ++f) {
    if (f != fold) append_rows(out.train, folds[static_cast<std::size_t>(f)]);
  }
  std::sort(out.train.begin(), out.train.end());
  return out;
}

namespace {
std::vector<RecordingKey> corpus_keys(const Corpus& corpus) {
  std::vector<RecordingKey> keys;
  keys.reserve(corpus.recordings.size());
  for (const auto& r : corpus.recordings) keys.push_back(r.key());
  return keys;
}
}  // namespace

SplitIndices split(const Corpus& corpus, const Holdout& protocol) {
  const auto keys = corpus_keys(corpus);
  return holdout_split(keys, protocol);
}

std::vector<std::vector<std::size_t>> split(const Corpus& corpus, const KFold& protocol) {
  const auto keys = corpus_keys(corpus);
  return kfold_split(keys, protocol);
}

}  // namespace emgds
