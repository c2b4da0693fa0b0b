#include <filesystem>
#include <map>
#include <set>

#include "testing.hpp"

using namespace emgds;

namespace {

std::string small_csv(std::string_view rows) {
  return std::string(kCorpusCsvHeader) + "\n" + std::string(rows);
}

std::vector<RecordingKey> grid_keys(int subjects, int reps) {
  std::vector<RecordingKey> keys;
  for (int s = 0; s < subjects; ++s)
    for (Activity a : kActivities)
      for (int r = 1; r <= reps; ++r) keys.push_back({"s" + std::to_string(s), a, r});
  return keys;
}

}  // namespace

TEST_CASE("activity codes and groups") {
  for (Activity a : kActivities) CHECK(parse_activity(std::string(1, activity_code(a))) == a);
  CHECK_ERROR_CODE(parse_activity("X"), ErrorCode::UnknownActivityCode);
  CHECK(group_of(Activity::C) == Group::Power);
  CHECK(group_of(Activity::H) == Group::Power);
  CHECK(group_of(Activity::S) == Group::Power);
  CHECK(group_of(Activity::L) == Group::Precision);
  CHECK(group_of(Activity::T) == Group::Precision);
  CHECK(group_of(Activity::P) == Group::Precision);
  CHECK(static_cast<int>(group_of(Activity::C)) == 1);
  CHECK(static_cast<int>(group_of(Activity::L)) == 0);
}

TEST_CASE("corpus csv parsing") {
  SUBCASE("well formed") {
    const auto c = parse_corpus_csv(small_csv("s1,P,1,0,0.5,1\ns1,P,1,1,-0.25,2\ns1,P,1,2,1e-3,3\n"));
    REQUIRE(c.recordings.size() == 1);
    CHECK(c.recordings[0].channels[0] == std::vector<double>{0.5, -0.25, 1e-3});
    CHECK(c.recordings[0].channels[1] == std::vector<double>{1, 2, 3});
  }
  SUBCASE("unknown activity") {
    CHECK_ERROR_CODE(parse_corpus_csv(small_csv("s1,X,1,0,1,2\ns1,X,1,1,1,2\n")),
                     ErrorCode::UnknownActivityCode);
  }
  SUBCASE("ragged channels") {
    CHECK_ERROR_CODE(parse_corpus_csv(small_csv("s1,P,1,0,1,2\ns1,P,1,1,1,\n")), ErrorCode::RaggedChannels);
  }
  SUBCASE("bad header") {
    CHECK_ERROR_CODE(parse_corpus_csv("subject,activity\ns1,P,1,0,1,2\n"), ErrorCode::MalformedHeader);
  }
  SUBCASE("malformed row reports the line") {
    try {
      parse_corpus_csv(small_csv("s1,P,1,0,1,2\ns1,P,1,1,abc,2\n"), 500.0, "x.csv");
      FAIL("no throw");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::MalformedRow);
      CHECK(std::string(e.what()).find("x.csv:3") != std::string::npos);
    }
  }
  SUBCASE("non contiguous sample index") {
    CHECK_ERROR_CODE(parse_corpus_csv(small_csv("s1,P,1,0,1,2\ns1,P,1,2,1,2\n")), ErrorCode::MalformedRow);
  }
  SUBCASE("empty") { CHECK_ERROR_CODE(parse_corpus_csv(small_csv("")), ErrorCode::EmptyCorpus); }
}

TEST_CASE("synthetic corpus shape and determinism") {
  SynthConfig cfg;
  cfg.subjects = 1;
  cfg.reps_per_activity = 2;
  cfg.duration_s = 0.2;
  const auto a = synth_corpus(cfg);
  CHECK(a.recordings.size() == 12);
  for (const auto& r : a.recordings) {
    CHECK(r.channels[0].size() == 100);
    CHECK(r.channels[1].size() == 100);
  }
  CHECK(synth_corpus(cfg) == a);
  cfg.seed = 43;
  const auto b = synth_corpus(cfg);
  CHECK(b.recordings[0].channels[0] != a.recordings[0].channels[0]);

  SynthConfig def;
  def.duration_s = 0.1;  // shape check only
  const auto full = synth_corpus(def);
  CHECK(full.recordings.size() == 5 * 6 * 30);
  CHECK(full.recordings.front().size() == 50);

  SynthConfig bad;
  bad.reps_per_activity = 1;
  CHECK_ERROR_CODE(synth_corpus(bad), ErrorCode::InvalidConfig);
}

TEST_CASE("synthetic power grasps carry about three times the precision RMS") {
  SynthConfig cfg;
  cfg.reps_per_activity = 6;
  const auto corpus = synth_corpus(cfg);
  double power = 0, precision = 0;
  for (const auto& r : corpus.recordings) {
    const double v = rms(r.channels[0]) + rms(r.channels[1]);
    (group_of(r.activity) == Group::Power ? power : precision) += v;
  }
  CHECK(power / precision == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("csv round trip of a synthetic corpus") {
  SynthConfig cfg;
  cfg.subjects = 1;
  cfg.reps_per_activity = 2;
  cfg.duration_s = 0.2;
  const auto c = synth_corpus(cfg);
  const auto path = std::filesystem::temp_directory_path() / "emgds_test_roundtrip.csv";
  write_csv(c, path);
  const auto back = ingest_csv(path);
  std::filesystem::remove(path);
  REQUIRE(back.recordings.size() == c.recordings.size());
  CHECK(std::holds_alternative<FromFile>(back.provenance));
  for (std::size_t i = 0; i < c.recordings.size(); ++i) {
    CHECK(back.recordings[i].key() == c.recordings[i].key());
    for (int ch = 0; ch < 2; ++ch) {
      const auto& x = c.recordings[i].channels[ch];
      const auto& y = back.recordings[i].channels[ch];
      REQUIRE(x.size() == y.size());
      for (std::size_t k = 0; k < x.size(); ++k) CHECK(y[k] == doctest::Approx(x[k]).epsilon(1e-12));
    }
  }
  CHECK_ERROR_CODE(ingest_csv("/nonexistent/emgds.csv"), ErrorCode::IoError);
}

TEST_CASE("segmentation") {
  Recording rec;
  rec.subject = "s";
  for (int i = 0; i < 10; ++i) {
    rec.channels[0].push_back(i);
    rec.channels[1].push_back(-i);
  }
  auto full = segment(rec, FullWindow{});
  CHECK(full[0].size() == 1);
  CHECK(full[0][0].samples.size() == 10);
  CHECK(full[1][0].source.channel == 1);

  auto sl = segment(rec, SlidingWindow{4, 2});
  REQUIRE(sl[0].size() == 4);
  std::vector<std::size_t> offsets;
  for (const auto& s : sl[0]) offsets.push_back(s.source.offset);
  CHECK(offsets == std::vector<std::size_t>{0, 2, 4, 6});
  CHECK(sl[1][3].samples == std::vector<double>{-6, -7, -8, -9});

  CHECK_ERROR_CODE(segment(rec, SlidingWindow{11, 1}), ErrorCode::WindowTooLong);
  CHECK_ERROR_CODE(segment(rec, SlidingWindow{4, 0}), ErrorCode::InvalidConfig);
  CHECK(describe_window(parse_window("sliding:4:2")) == "sliding:4:2");
  CHECK(std::holds_alternative<FullWindow>(parse_window("full")));
  CHECK_ERROR_CODE(parse_window("sliding:4"), ErrorCode::InvalidConfig);
}

TEST_CASE("holdout split counts per cell") {
  const auto keys = grid_keys(2, 30);
  const auto s = holdout_split(keys, Holdout{0.7, 9});
  std::map<std::pair<std::string, Activity>, int> train, test;
  for (auto i : s.train) ++train[{keys[i].subject, keys[i].activity}];
  for (auto i : s.test) ++test[{keys[i].subject, keys[i].activity}];
  CHECK(train.size() == 12);
  for (const auto& [cell, n] : train) {
    CHECK(n == 21);
    CHECK(test[cell] == 9);
  }
  const auto again = holdout_split(keys, Holdout{0.7, 9});
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  const auto other = holdout_split(keys, Holdout{0.7, 10});
  CHECK(other.train != s.train);
}

TEST_CASE("kfold split") {
  const auto keys = grid_keys(1, 30);
  const auto folds = kfold_split(keys, KFold{5, 3});
  REQUIRE(folds.size() == 5);
  std::set<std::size_t> seen;
  for (const auto& f : folds) {
    std::map<Activity, int> per_cell;
    for (auto i : f) {
      CHECK(seen.insert(i).second);
      ++per_cell[keys[i].activity];
    }
    for (const auto& [a, n] : per_cell) CHECK(n == 6);
  }
  CHECK(seen.size() == keys.size());
  const auto f2 = kfold_fold(keys, KFold{5, 3}, 2);
  CHECK(f2.test == folds[2]);
  CHECK(f2.train.size() + f2.test.size() == keys.size());
}

TEST_CASE("split needs two repetitions per cell") {
  const auto keys = grid_keys(1, 1);
  CHECK_ERROR_CODE(holdout_split(keys, Holdout{}), ErrorCode::InsufficientRepetitions);
}

TEST_CASE("windows of one recording stay together") {
  std::vector<RecordingKey> keys;
  for (Activity a : kActivities)
    for (int r = 1; r <= 4; ++r)
      for (int w = 0; w < 3; ++w) keys.push_back({"s", a, r});
  const auto s = holdout_split(keys, Holdout{0.5, 1});
  std::set<RecordingKey> train;
  for (auto i : s.train) train.insert(keys[i]);
  for (auto i : s.test) CHECK(train.count(keys[i]) == 0);
  CHECK(s.train.size() == 36);
}

TEST_CASE("split disjointness and coverage over random configurations") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const int subjects = 1 + static_cast<int>(rng() % 4);
    const int reps = 2 + static_cast<int>(rng() % 12);
    const auto keys = grid_keys(subjects, reps);
    const double fraction = std::uniform_real_distribution<double>(0.05, 0.95)(rng);
    const auto s = holdout_split(keys, Holdout{fraction, rng()});
    std::vector<int> hits(keys.size(), 0);
    for (auto i : s.train) ++hits[i];
    for (auto i : s.test) ++hits[i];
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    CHECK(!s.train.empty());
    CHECK(!s.test.empty());

    const int k = 2 + static_cast<int>(rng() % static_cast<unsigned>(std::min(reps, 6) - 1));
    const auto folds = kfold_split(keys, KFold{k, rng()});
    std::vector<int> fh(keys.size(), 0);
    for (const auto& f : folds)
      for (auto i : f) ++fh[i];
    CHECK(std::all_of(fh.begin(), fh.end(), [](int h) { return h == 1; }));
  }
}
