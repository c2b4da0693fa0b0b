#include <sys/wait.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "testing.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

fs::path workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("emgds_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Run run(const std::string& args) {
  const auto log = workdir() / "last_run.txt";
  const std::string cmd = std::string(EMGDS_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(log);
  return r;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

// Small corpus and its features, generated once.
void ensure_small_features() {
  static const bool done = [] {
    REQUIRE(run("synth --out " + path("small.csv") + " --subjects 2 --reps 4 --rate 500 --duration 1 --seed 7")
                .code == 0);
    REQUIRE(run("features --in " + path("small.csv") + " --out " + path("small_f.csv")).code == 0);
    return true;
  }();
  (void)done;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("cli synth") {
  const auto r = run("synth --out " + path("a.csv") + " --subjects 2 --reps 4 --rate 500 --duration 1 --seed 7");
  REQUIRE(r.code == 0);
  const auto corpus = emgds::ingest_csv(path("a.csv"));
  CHECK(corpus.recordings.size() == 48);
  for (const auto& rec : corpus.recordings) CHECK(rec.size() == 500);
  REQUIRE(run("synth --out " + path("b.csv") + " --subjects 2 --reps 4 --rate 500 --duration 1 --seed 7").code == 0);
  CHECK(slurp(path("a.csv")) == slurp(path("b.csv")));
  CHECK(run("synth --out " + path("c.csv") + " --reps 1").code == 2);
}

TEST_CASE("cli features") {
  ensure_small_features();
  const auto rows = lines(slurp(path("small_f.csv")));
  REQUIRE(rows.size() == 49);
  CHECK(std::count(rows[0].begin(), rows[0].end(), ',') + 1 == 4 + 22);
  REQUIRE(run("features --in " + path("small.csv") + " --out " + path("p2.csv") + " --ar-order 2").code == 0);
  const auto header = lines(slurp(path("p2.csv")))[0];
  CHECK(std::count(header.begin(), header.end(), ',') + 1 == 4 + 18);

  std::ofstream(path("corrupt.csv")) << emgds::kCorpusCsvHeader << "\ns1,P,1,0,1.0,2.0\ns1,P,1,1,oops,2.0\n";
  const auto bad = run("features --in " + path("corrupt.csv") + " --out " + path("x.csv"));
  CHECK(bad.code == 1);
  CHECK(bad.out.find("corrupt.csv:3") != std::string::npos);
  CHECK(run("features --in " + path("missing.csv") + " --out " + path("x.csv")).code == 1);
  CHECK(run("features --in " + path("small.csv") + " --out " + path("x.csv") + " --window sliding:0").code == 2);
}

TEST_CASE("cli train and evaluate") {
  ensure_small_features();
  const auto f = path("small_f.csv");
  REQUIRE(run("train --features " + f + " --mode dual --model " + path("dual.json")).code == 0);
  const auto dual = json::parse(slurp(path("dual.json")));
  CHECK(dual["mode"] == "dual");
  CHECK(dual["stage1"].contains("pca"));
  CHECK(dual["stage2_power"].contains("pca"));
  CHECK(dual["stage2_precision"].contains("pca"));
  const auto train_report = json::parse(slurp(path("dual.train.json")));
  CHECK(train_report.contains("training_accuracy"));
  CHECK(train_report["retained_dims"].contains("stage1"));
  CHECK(train_report["support_vectors"].contains("power"));

  REQUIRE(run("train --features " + f + " --mode single --pca-dims 2 --model " + path("single.json")).code == 0);
  const auto single = json::parse(slurp(path("single.json")));
  CHECK(single["pca"]["components"].size() == 2);

  REQUIRE(run("train --features " + f + " --mode single --subject subj1 --model " + path("s1.json") +
              " --report " + path("s1_report.json"))
              .code == 0);
  const auto s1 = json::parse(slurp(path("s1_report.json")));
  CHECK(s1["config"]["subject"] == "subj1");
  CHECK(s1["n_train"].get<int>() + s1["n_test"].get<int>() == 24);

  const auto ev = run("evaluate --features " + f + " --model " + path("dual.json") + " --report " + path("r.json"));
  REQUIRE(ev.code == 0);
  CHECK(ev.out.find("accuracy=") != std::string::npos);
  const auto report = json::parse(slurp(path("r.json")));
  const auto parsed = emgds::report_from_json(report);
  CHECK(parsed.total == 24);
  CHECK(report["timestamp"].is_null());
  CHECK(report["split"]["protocol"] == "holdout");

  const auto cmp = run("evaluate --features " + f + " --model " + path("dual.json") + " --report " +
                       path("r2.json") + " --compare " + path("single.json"));
  CHECK(cmp.code == 0);
  CHECK(cmp.out.find("compare: single=") != std::string::npos);
  CHECK(run("evaluate --features " + f + " --model " + path("dual.json") + " --report " + path("r3.json") +
            " --compare " + path("dual.json"))
            .code == 2);

  auto tampered = dual;
  tampered["stage1"]["pca"]["mean"].erase(0);
  std::ofstream(path("tampered.json")) << tampered.dump();
  const auto t = run("evaluate --features " + f + " --model " + path("tampered.json") + " --report " + path("r4.json"));
  CHECK(t.code == 1);
  CHECK(t.out.find("SchemaError") != std::string::npos);

  CHECK(run("train --features " + f + " --kfold 4 --fold 1 --model " + path("kf.json")).code == 0);
  CHECK(run("evaluate --features " + f + " --model " + path("kf.json") + " --report " + path("kf_r.json")).code == 0);
  CHECK(run("train --features " + f + " --kfold 4 --fold 4 --model " + path("kf.json")).code == 2);
  CHECK(run("train --features " + f + " --model " + path("m.json") + " --mode triple").code == 2);
  CHECK(run("train --features " + f + " --model " + path("m.json") + " --pca-var 0.9 --pca-dims 2").code == 2);
  CHECK(run("train --features " + f + " --model " + path("m.json") + " --gamma nope").code == 2);
  CHECK(run("train --model " + path("m.json")).code == 2);
}

TEST_CASE("cli dendrogram") {
  ensure_small_features();
  const auto f = path("small_f.csv");
  const auto r = run("dendrogram --features " + f + " --out " + path("d.json") + " --dot " + path("d.dot") +
                     " --newick " + path("d.nwk"));
  REQUIRE(r.code == 0);
  CHECK(r.out.find("root split:") != std::string::npos);
  const auto tree = emgds::parse_dendrogram_json(slurp(path("d.json")));
  CHECK(tree.leaf_count() == 6);
  CHECK(slurp(path("d.nwk")).back() == '\n');
  CHECK(slurp(path("d.dot")).rfind("graph", 0) == 0);

  REQUIRE(run("dendrogram --features " + f + " --linkage complete --out " + path("dc.json")).code == 0);
  const auto complete = emgds::parse_dendrogram_json(slurp(path("dc.json")));
  for (const auto& n : complete.nodes)
    if (!n.is_leaf()) {
      CHECK(n.height >= complete.nodes[static_cast<std::size_t>(n.left)].height);
      CHECK(n.height >= complete.nodes[static_cast<std::size_t>(n.right)].height);
    }

  // Keep a single C row.
  const auto all = lines(slurp(f));
  std::ofstream out(path("one_c.csv"));
  bool kept = false;
  for (const auto& l : all) {
    if (l.find(",C,") != std::string::npos) {
      if (kept) continue;
      kept = true;
    }
    out << l << "\n";
  }
  out.close();
  const auto one = run("dendrogram --features " + path("one_c.csv"));
  CHECK(one.code == 1);
  CHECK(one.out.find("TooFewSamples") != std::string::npos);
  CHECK(run("dendrogram --features " + f + " --linkage ward").code == 2);
}

TEST_CASE("cli usage errors") {
  CHECK(run("").code == 2);
  CHECK(run("bogus").code == 2);
  CHECK(run("synth").code == 2);
  CHECK(run("synth --out x --frobnicate 1").code == 2);
  CHECK(run("--help").code == 0);
}
