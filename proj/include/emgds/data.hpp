#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace emgds {

/// Grasp classes, in the canonical order used for matrices, serialization
/// and tie-breaking.
enum class Activity : int { P = 0, L = 1, T = 2, H = 3, S = 4, C = 5 };

inline constexpr std::array<Activity, 6> kActivities = {Activity::P, Activity::L, Activity::T,
                                                        Activity::H, Activity::S, Activity::C};
inline constexpr std::size_t kNumActivities = kActivities.size();

char activity_code(Activity a) noexcept;
std::string_view activity_name(Activity a) noexcept;
/// Throws Error(UnknownActivityCode) for anything but one of "PLTHSC".
Activity parse_activity(std::string_view code);
inline int activity_index(Activity a) noexcept { return static_cast<int>(a); }

enum class Group : int { Precision = 0, Power = 1 };

/// C, H, S are power grasps; L, T, P are precision grasps.
Group group_of(Activity a) noexcept;
std::string_view group_name(Group g) noexcept;

struct RecordingKey {
  std::string subject;
  Activity activity = Activity::P;
  int repetition = 1;

  auto operator<=>(const RecordingKey&) const = default;
};

struct Recording {
  std::string subject;
  Activity activity = Activity::P;
  int repetition = 1;
  double rate_hz = 500.0;
  std::array<std::vector<double>, 2> channels;

  RecordingKey key() const { return {subject, activity, repetition}; }
  std::size_t size() const noexcept { return channels[0].size(); }
  /// Throws InvalidConfig / RaggedChannels when the invariants do not hold.
  void validate() const;

  bool operator==(const Recording&) const = default;
};

struct SegmentSource {
  std::string subject;
  Activity activity = Activity::P;
  int repetition = 1;
  int channel = 0;
  std::size_t offset = 0;

  bool operator==(const SegmentSource&) const = default;
};

struct Segment {
  std::vector<double> samples;
  SegmentSource source;
};

struct FromFile {
  std::string path;
  bool operator==(const FromFile&) const = default;
};
struct Synthetic {
  std::uint64_t seed = 0;
  bool operator==(const Synthetic&) const = default;
};
using Provenance = std::variant<FromFile, Synthetic>;

struct Corpus {
  std::vector<Recording> recordings;
  Provenance provenance = Synthetic{};

  bool operator==(const Corpus&) const = default;
};

struct SynthConfig {
  int subjects = 5;
  int reps_per_activity = 30;
  double rate_hz = 500.0;
  double duration_s = 6.0;
  std::uint64_t seed = 42;
  double power_rms_scale = 3.0;

  void validate() const;
};

/// Seeded synthetic sEMG corpus. Every recording is an order-2 AR process
/// driven by white noise and multiplied by a contraction envelope. The
/// envelope level of the power grasps is `power_rms_scale` times that of
/// the precision grasps.
Corpus synth_corpus(const SynthConfig& cfg);

// --- CSV -------------------------------------------------------------------

inline constexpr std::string_view kCorpusCsvHeader =
    "subject,activity,repetition,sample_index,ch1,ch2";

/// Reads the corpus CSV; `rate_hz` is supplied out of band.
Corpus ingest_csv(const std::filesystem::path& path, double rate_hz = 500.0);
Corpus parse_corpus_csv(std::string_view text, double rate_hz = 500.0,
                        std::string source_name = "<memory>");
void write_csv(const Corpus& corpus, const std::filesystem::path& path);
std::string format_corpus_csv(const Corpus& corpus);

// --- Segmentation ----------------------------------------------------------

struct FullWindow {};
struct SlidingWindow {
  std::size_t length = 0;
  std::size_t step = 1;
};
using Window = std::variant<FullWindow, SlidingWindow>;

/// One inner vector per channel, each holding the window positions in order.
std::array<std::vector<Segment>, 2> segment(const Recording& rec, const Window& window);

std::string describe_window(const Window& window);
/// Accepts "full" or "sliding:<len>:<step>".
Window parse_window(std::string_view text);

// --- Splitting -------------------------------------------------------------

struct Holdout {
  double train_fraction = 0.7;
  std::uint64_t seed = 42;
};
struct KFold {
  int k = 5;
  std::uint64_t seed = 42;
};
using SplitProtocol = std::variant<Holdout, KFold>;

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Stratified split over rows identified by their recording key. Rows that
/// share a key (several windows of one recording) always land on the same
/// side. Cells are (subject, activity); each needs at least two distinct
/// repetitions.
SplitIndices holdout_split(std::span<const RecordingKey> rows, const Holdout& protocol);
/// Returns k disjoint test folds covering every row.
std::vector<std::vector<std::size_t>> kfold_split(std::span<const RecordingKey> rows,
                                                  const KFold& protocol);
/// Train/test view of fold `fold` of a k-fold split.
SplitIndices kfold_fold(std::span<const RecordingKey> rows, const KFold& protocol, int fold);

SplitIndices split(const Corpus& corpus, const Holdout& protocol);
std::vector<std::vector<std::size_t>> split(const Corpus& corpus, const KFold& protocol);

}  // namespace emgds
