#include <cmath>

#include "testing.hpp"

using namespace emgds;
using Rows = std::vector<std::vector<double>>;

namespace {

const std::vector<Activity> kAll(kActivities.begin(), kActivities.end());

Matrix triads() {
  Matrix d(6, 6, 0.0);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      if (i != j) d(i, j) = (group_of(kAll[i]) == group_of(kAll[j])) ? 1.0 : 10.0;
  return d;
}

Matrix random_distances(std::mt19937_64& rng, bool metric) {
  Matrix d(6, 6, 0.0);
  if (metric) {
    // Euclidean distances between random points.
    std::normal_distribution<double> n;
    Rows p(6, std::vector<double>(3));
    for (auto& r : p)
      for (auto& v : r) v = n(rng);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = 0; j < 6; ++j) d(i, j) = std::sqrt(squared_distance(p[i], p[j]));
  } else {
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (std::size_t i = 0; i < 6; ++i)
      for (std::size_t j = i + 1; j < 6; ++j) d(i, j) = d(j, i) = u(rng);
  }
  return d;
}

void check_monotone(const Dendrogram& t) {
  // Every merge is at least as high as its children.
  for (const auto& n : t.nodes) {
    if (n.is_leaf()) continue;
    CHECK(n.height >= t.nodes[static_cast<std::size_t>(n.left)].height);
    CHECK(n.height >= t.nodes[static_cast<std::size_t>(n.right)].height);
  }
  CHECK(t.leaves(t.root()).size() == t.leaf_count());
}

// Two-class samples with identity-like within-class scatter.
void two_classes(std::mt19937_64& rng, const std::vector<double>& mean_b, double sd, Rows& x,
                 std::vector<Activity>& y) {
  std::normal_distribution<double> n;
  for (int i = 0; i < 400; ++i) {
    const bool b = i % 2;
    std::vector<double> v(2);
    for (int k = 0; k < 2; ++k) v[k] = (b ? mean_b[k] : 0.0) + sd * n(rng);
    x.push_back(v);
    y.push_back(b ? Activity::L : Activity::P);
  }
}

}  // namespace

TEST_CASE("mahalanobis distance examples") {
  const std::vector<Activity> order{Activity::P, Activity::L};
  const Rows means{{0, 0}, {3, 4}};
  auto sep = separation_from_moments(order, means, Matrix::identity(2));
  CHECK(sep.distances(0, 1) == doctest::Approx(5.0));
  Matrix four = Matrix::identity(2);
  four(0, 0) = four(1, 1) = 4.0;
  sep = separation_from_moments(order, means, four);
  CHECK(sep.distances(0, 1) == doctest::Approx(2.5));
  CHECK(sep.distances(1, 0) == sep.distances(0, 1));
  CHECK(sep.distances(0, 0) == 0.0);

  const Rows same{{1, 2}, {2, 1}, {0, 0}, {3, 5}};
  const Rows twice{same[0], same[1], same[2], same[3], same[0], same[1], same[2], same[3]};
  std::vector<Activity> labels(4, Activity::P);
  labels.resize(8, Activity::T);
  sep = class_separation(twice, labels);
  CHECK(sep.distances(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("pooled covariance estimate") {
  std::mt19937_64 rng(1);
  Rows x;
  std::vector<Activity> y;
  two_classes(rng, {3, 4}, 2.0, x, y);
  const auto sep = class_separation(x, y);
  CHECK(sep.pooled_covariance(0, 0) == doctest::Approx(4.0).epsilon(0.15));
  CHECK(sep.distances(0, 1) == doctest::Approx(2.5).epsilon(0.1));
  CHECK(sep.class_order == std::vector<Activity>{Activity::P, Activity::L});
}

TEST_CASE("affine invariance") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 20; ++trial) {
    Rows x;
    std::vector<Activity> y;
    for (Activity a : {Activity::P, Activity::H, Activity::C})
      for (int i = 0; i < 20; ++i) {
        x.push_back({n(rng) + activity_index(a), n(rng) * 2, n(rng) - activity_index(a)});
        y.push_back(a);
      }
    Matrix a(3, 3);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) a(i, j) = n(rng) + (i == j ? 3.0 : 0.0);
    const std::vector<double> b{n(rng) * 10, n(rng), n(rng)};
    Rows z;
    for (const auto& v : x) {
      auto w = a.multiply(v);
      for (std::size_t k = 0; k < 3; ++k) w[k] += b[k];
      z.push_back(w);
    }
    const auto d1 = class_separation(x, y).distances;
    const auto d2 = class_separation(z, y).distances;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) CHECK(oracle::close(d1(i, j), d2(i, j), 1e-6, 1e-12));
  }
}

TEST_CASE("class separation errors and regularization") {
  CHECK_ERROR_CODE(class_separation(Rows{{0, 0}, {1, 1}, {2, 2}},
                                    std::vector<Activity>{Activity::P, Activity::P, Activity::L}),
                   ErrorCode::TooFewSamples);
  CHECK_ERROR_CODE(class_separation(Rows{{0}, {1}}, std::vector<Activity>{Activity::P, Activity::P}),
                   ErrorCode::TooFewSamples);
  // Second coordinate is constant within every class: singular scatter.
  Rows x;
  std::vector<Activity> y;
  for (int i = 0; i < 10; ++i) {
    x.push_back({static_cast<double>(i % 5), 0.0});
    y.push_back(Activity::P);
    x.push_back({static_cast<double>(i % 5) + 1, 0.0});
    y.push_back(Activity::L);
  }
  const auto sep = class_separation(x, y);
  CHECK(sep.regularized);
  CHECK(std::isfinite(sep.distances(0, 1)));
}

TEST_CASE("triad block structure for every linkage") {
  for (Linkage m : {Linkage::Single, Linkage::Complete, Linkage::Average}) {
    const auto t = linkage(triads(), kAll, m);
    const auto& root = t.nodes[static_cast<std::size_t>(t.root())];
    CHECK(root.height == 10.0);
    CHECK(testutil::dendrogram_root_side(t, true) == "PLT");
    CHECK(testutil::dendrogram_root_side(t, false) == "HSC");
    check_monotone(t);
  }
}

TEST_CASE("equal distances merge deterministically") {
  Matrix d(6, 6, 2.0);
  for (std::size_t i = 0; i < 6; ++i) d(i, i) = 0.0;
  const auto t = linkage(d, kAll);
  REQUIRE(t.nodes.size() == 11);
  for (std::size_t i = 6; i < 11; ++i) CHECK(t.nodes[i].height == 2.0);
  // Lowest pair first, then the growing cluster absorbs the next index.
  CHECK(t.nodes[6].left == 0);
  CHECK(t.nodes[6].right == 1);
  CHECK(t.nodes[7].left == 6);
  CHECK(t.nodes[7].right == 2);
  CHECK(linkage(d, kAll) == t);
}

TEST_CASE("linkage heights are monotone on random inputs") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const auto d = random_distances(rng, trial % 2 == 0);
    check_monotone(linkage(d, kAll, Linkage::Single));
    check_monotone(linkage(d, kAll, Linkage::Complete));
    check_monotone(linkage(d, kAll, Linkage::Average));
  }
}

TEST_CASE("linkage rejects invalid matrices") {
  Matrix d = triads();
  d(0, 1) = 3.0;
  CHECK_ERROR_CODE(linkage(d, kAll), ErrorCode::InvalidConfig);
  d = triads();
  d(2, 2) = 1.0;
  CHECK_ERROR_CODE(linkage(d, kAll), ErrorCode::InvalidConfig);
  CHECK_ERROR_CODE(parse_linkage("ward"), ErrorCode::InvalidConfig);
  CHECK(parse_linkage("average") == Linkage::Average);
}

TEST_CASE("dendrogram exports") {
  Matrix d(2, 2, 0.0);
  d(0, 1) = d(1, 0) = 2.5;
  const std::vector<Activity> pl{Activity::P, Activity::L};
  const auto small = linkage(d, pl);
  CHECK(export_dendrogram(small, DendrogramFormat::Newick) == "(P:2.5,L:2.5);\n");

  const auto t = linkage(triads(), kAll, Linkage::Average);
  const auto json_text = export_dendrogram(t, DendrogramFormat::Json);
  CHECK(parse_dendrogram_json(json_text) == t);
  CHECK(export_dendrogram(parse_dendrogram_json(json_text), DendrogramFormat::Json) == json_text);
  CHECK_ERROR_CODE(parse_dendrogram_json("{\"left\": 1}"), ErrorCode::SchemaError);

  const auto dot = export_dendrogram(t, DendrogramFormat::Dot);
  CHECK(dot.rfind("graph", 0) == 0);
  CHECK(std::count(dot.begin(), dot.end(), '{') == std::count(dot.begin(), dot.end(), '}'));
  CHECK(dot.find("10.000000") != std::string::npos);
  // Exactly one node without a parent edge.
  int roots = 0;
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const std::string id = "n" + std::to_string(i);
    if (dot.find("-- " + id + ";") == std::string::npos) ++roots;
  }
  CHECK(roots == 1);
}

TEST_CASE("synthetic corpus groups power against precision") {
  const auto& data = testutil::default_synthetic();
  const auto pca = fit_pca(data.all, VarianceFraction{0.95});
  Rows z;
  std::vector<Activity> y;
  for (const auto& v : data.all) {
    z.push_back(project(pca, v.values));
    y.push_back(*v.label);
  }
  const auto t = linkage(class_separation(z, y), Linkage::Single);
  CHECK(testutil::dendrogram_root_side(t, true) == "PLT");
  CHECK(testutil::dendrogram_root_side(t, false) == "HSC");
}
