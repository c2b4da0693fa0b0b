#include "emgds/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <json.hpp>

#include "csv_util.hpp"
#include "emgds/error.hpp"

namespace emgds {

namespace {

constexpr double kRidgeFactor = 1e-8;
constexpr double kPivotFactor = 1e-12;

Matrix mahalanobis_matrix(const std::vector<std::vector<double>>& means, const Matrix& lower) {
  const std::size_t k = means.size();
  Matrix d(k, k);
  std::vector<double> diff(lower.rows());
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      for (std::size_t c = 0; c < diff.size(); ++c) diff[c] = means[i][c] - means[j][c];
      const auto y = forward_substitute(lower, diff);
      d(i, j) = d(j, i) = std::sqrt(dot(y, y));
    }
  }
  return d;
}

// Cholesky of the pooled covariance, adding a small ridge when it is
// numerically singular.
Matrix factor_covariance(Matrix& cov, bool& regularized) {
  const std::size_t l = cov.rows();
  double trace = 0.0;
  for (std::size_t i = 0; i < l; ++i) trace += cov(i, i);
  const double mean_diag = l > 0 ? trace / static_cast<double>(l) : 0.0;
  auto lower = cholesky(cov, kPivotFactor * mean_diag);
  regularized = false;
  if (lower.rows() == 0) {
    for (std::size_t i = 0; i < l; ++i) cov(i, i) += kRidgeFactor * mean_diag;
    regularized = true;
    lower = cholesky(cov, 0.0);
    if (lower.rows() == 0) {
      throw Error(ErrorCode::SingularCovariance,
                  "pooled covariance is singular even after regularization");
    }
  }
  return lower;
}

}  // namespace

ClassSeparation separation_from_moments(std::vector<Activity> class_order,
                                        std::vector<std::vector<double>> means, Matrix pooled_covariance) {
  if (class_order.size() != means.size() || class_order.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "need at least 2 classes with one mean each");
  }
  const std::size_t l = pooled_covariance.rows();
  if (pooled_covariance.cols() != l) throw Error(ErrorCode::DimensionMismatch, "covariance not square");
  for (const auto& m : means) {
    if (m.size() != l) throw Error(ErrorCode::DimensionMismatch, "mean dimension differs from covariance");
  }
  ClassSeparation out;
  out.class_order = std::move(class_order);
  out.means = std::move(means);
  out.pooled_covariance = std::move(pooled_covariance);
  Matrix work = out.pooled_covariance;
  const auto lower = factor_covariance(work, out.regularized);
  if (out.regularized) out.pooled_covariance = work;
  out.distances = mahalanobis_matrix(out.means, lower);
  return out;
}

ClassSeparation class_separation(std::span<const std::vector<double>> vectors,
                                 std::span<const Activity> labels) {
  if (vectors.size() != labels.size()) {
    throw Error(ErrorCode::DimensionMismatch, "vectors and labels differ in count");
  }
  if (vectors.empty()) throw Error(ErrorCode::TooFewSamples, "no vectors");
  const std::size_t l = vectors.front().size();
  for (const auto& v : vectors)
    if (v.size() != l) throw Error(ErrorCode::DimensionMismatch, "vectors differ in dimension");

  std::array<std::vector<std::size_t>, kNumActivities> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    members[static_cast<std::size_t>(activity_index(labels[i]))].push_back(i);
  }
  std::vector<Activity> order;
  std::vector<std::vector<double>> means;
  for (Activity a : kActivities) {
    const auto& idx = members[static_cast<std::size_t>(activity_index(a))];
    if (idx.empty()) continue;
    if (idx.size() < 2) {
      throw Error(ErrorCode::TooFewSamples, std::string("class ") + activity_code(a) + " has " +
                                                std::to_string(idx.size()) + " vector; need >= 2");
    }
    std::vector<double> mu(l, 0.0);
    for (std::size_t i : idx)
      for (std::size_t c = 0; c < l; ++c) mu[c] += vectors[i][c];
    for (auto& m : mu) m /= static_cast<double>(idx.size());
    order.push_back(a);
    means.push_back(std::move(mu));
  }
  const std::size_t k = order.size();
  if (k < 2) throw Error(ErrorCode::TooFewSamples, "need at least 2 classes");
  if (vectors.size() <= l + k) {
    throw Error(ErrorCode::TooFewSamples, std::to_string(vectors.size()) + " samples for dimension " +
                                              std::to_string(l) + " and " + std::to_string(k) +
                                              " classes");
  }

  Matrix cov(l, l);
  for (std::size_t ci = 0; ci < k; ++ci) {
    const auto& idx = members[static_cast<std::size_t>(activity_index(order[ci]))];
    for (std::size_t i : idx) {
      for (std::size_t r = 0; r < l; ++r) {
        const double dr = vectors[i][r] - means[ci][r];
        for (std::size_t c = r; c < l; ++c) cov(r, c) += dr * (vectors[i][c] - means[ci][c]);
      }
    }
  }
  const double dof = static_cast<double>(vectors.size() - k);
  for (std::size_t r = 0; r < l; ++r)
    for (std::size_t c = r; c < l; ++c) {
      cov(r, c) /= dof;
      cov(c, r) = cov(r, c);
    }
  return separation_from_moments(std::move(order), std::move(means), std::move(cov));
}

// --- Linkage ----------------------------------------------------------------

std::string_view linkage_name(Linkage method) noexcept {
  switch (method) {
    case Linkage::Single: return "single";
    case Linkage::Complete: return "complete";
    case Linkage::Average: return "average";
  }
  return "?";
}

Linkage parse_linkage(std::string_view name) {
  if (name == "single") return Linkage::Single;
  if (name == "complete") return Linkage::Complete;
  if (name == "average") return Linkage::Average;
  throw Error(ErrorCode::InvalidConfig, "linkage must be single, complete or average");
}

std::vector<Activity> Dendrogram::leaves(int node) const {
  std::vector<Activity> out;
  std::vector<int> stack{node};
  while (!stack.empty()) {
    const int n = stack.back();
    stack.pop_back();
    const auto& nd = nodes.at(static_cast<std::size_t>(n));
    if (nd.is_leaf()) {
      out.push_back(nd.leaf);
    } else {
      stack.push_back(nd.left);
      stack.push_back(nd.right);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

bool Dendrogram::operator==(const Dendrogram& other) const {
  if (nodes.size() != other.nodes.size()) return false;
  if (nodes.empty()) return true;
  std::function<bool(int, int)> same = [&](int a, int b) {
    const auto& x = nodes[static_cast<std::size_t>(a)];
    const auto& y = other.nodes[static_cast<std::size_t>(b)];
    if (x.is_leaf() != y.is_leaf()) return false;
    if (x.is_leaf()) return x.leaf == y.leaf;
    return x.height == y.height && same(x.left, y.left) && same(x.right, y.right);
  };
  return same(root(), other.root());
}

Dendrogram linkage(const Matrix& distances, std::span<const Activity> classes, Linkage method) {
  const std::size_t k = classes.size();
  if (k < 1 || distances.rows() != k || distances.cols() != k) {
    throw Error(ErrorCode::DimensionMismatch, "distance matrix does not match the class list");
  }
  for (std::size_t i = 0; i < k; ++i) {
    if (distances(i, i) != 0.0) throw Error(ErrorCode::InvalidConfig, "distance diagonal must be 0");
    for (std::size_t j = 0; j < k; ++j) {
      if (distances(i, j) != distances(j, i) || !(distances(i, j) >= 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "distances must be symmetric and non-negative");
      }
    }
  }

  Dendrogram tree;
  for (std::size_t i = 0; i < k; ++i) {
    Dendrogram::Node leaf;
    leaf.leaf = classes[i];
    tree.nodes.push_back(leaf);
  }

  struct Cluster {
    int node;
    std::size_t first;  // lowest class index inside
    std::size_t size;
  };
  std::vector<Cluster> active;
  for (std::size_t i = 0; i < k; ++i) active.push_back({static_cast<int>(i), i, 1});
  Matrix d = distances;  // indexed by position in `active`

  while (active.size() > 1) {
    // `active` stays sorted by `first`, so scanning (i < j) in order visits
    // pairs lexicographically; strict < keeps the earliest tie.
    std::size_t bi = 0, bj = 1;
    for (std::size_t i = 0; i < active.size(); ++i)
      for (std::size_t j = i + 1; j < active.size(); ++j)
        if (d(i, j) < d(bi, bj)) {
          bi = i;
          bj = j;
        }

    Dendrogram::Node merged;
    merged.left = active[bi].node;
    merged.right = active[bj].node;
    merged.height = d(bi, bj);
    tree.nodes.push_back(merged);

    const std::size_t m = active.size();
    std::vector<double> row(m);
    for (std::size_t x = 0; x < m; ++x) {
      if (x == bi || x == bj) continue;
      const double da = d(bi, x), db = d(bj, x);
      switch (method) {
        case Linkage::Single: row[x] = std::min(da, db); break;
        case Linkage::Complete: row[x] = std::max(da, db); break;
        case Linkage::Average: {
          const auto na = static_cast<double>(active[bi].size);
          const auto nb = static_cast<double>(active[bj].size);
          row[x] = (na * da + nb * db) / (na + nb);
          break;
        }
      }
    }

    // Merged cluster takes slot bi (bi < bj, so its `first` is the lower one).
    active[bi] = {static_cast<int>(tree.nodes.size() - 1), active[bi].first,
                  active[bi].size + active[bj].size};
    for (std::size_t x = 0; x < m; ++x) {
      if (x == bi || x == bj) continue;
      d(bi, x) = d(x, bi) = row[x];
    }
    Matrix next(m - 1, m - 1);
    for (std::size_t r = 0, rr = 0; r < m; ++r) {
      if (r == bj) continue;
      for (std::size_t c = 0, cc = 0; c < m; ++c) {
        if (c == bj) continue;
        next(rr, cc++) = d(r, c);
      }
      ++rr;
    }
    active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
    d = std::move(next);
  }
  return tree;
}

Dendrogram linkage(const ClassSeparation& sep, Linkage method) {
  return linkage(sep.distances, sep.class_order, method);
}

// --- Export -----------------------------------------------------------------

namespace {

nlohmann::json node_json(const Dendrogram& t, int n) {
  const auto& nd = t.nodes.at(static_cast<std::size_t>(n));
  if (nd.is_leaf()) return {{"leaf", std::string(1, activity_code(nd.leaf))}};
  return {{"left", node_json(t, nd.left)}, {"right", node_json(t, nd.right)}, {"height", nd.height}};
}

void newick(const Dendrogram& t, int n, double parent_height, bool is_root, std::string& out) {
  const auto& nd = t.nodes.at(static_cast<std::size_t>(n));
  if (nd.is_leaf()) {
    out += activity_code(nd.leaf);
  } else {
    out += '(';
    newick(t, nd.left, nd.height, false, out);
    out += ',';
    newick(t, nd.right, nd.height, false, out);
    out += ')';
  }
  if (!is_root) {
    out += ':';
    out += detail::shortest(parent_height - nd.height);
  }
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string export_dendrogram(const Dendrogram& tree, DendrogramFormat format) {
  if (tree.nodes.empty()) throw Error(ErrorCode::InvalidConfig, "empty dendrogram");
  switch (format) {
    case DendrogramFormat::Json:
      return node_json(tree, tree.root()).dump(2) + "\n";
    case DendrogramFormat::Newick: {
      std::string out;
      newick(tree, tree.root(), 0.0, true, out);
      out += ";\n";
      return out;
    }
    case DendrogramFormat::Dot: {
      std::string out = "graph dendrogram {\n  node [fontname=\"Helvetica\"];\n";
      for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& nd = tree.nodes[i];
        out += "  n" + std::to_string(i) + " [label=\"";
        if (nd.is_leaf()) {
          out += activity_code(nd.leaf);
          out += "\", shape=box];\n";
        } else {
          out += fixed6(nd.height) + "\", shape=ellipse];\n";
        }
      }
      for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& nd = tree.nodes[i];
        if (nd.is_leaf()) continue;
        out += "  n" + std::to_string(i) + " -- n" + std::to_string(nd.left) + ";\n";
        out += "  n" + std::to_string(i) + " -- n" + std::to_string(nd.right) + ";\n";
      }
      out += "}\n";
      return out;
    }
  }
  return {};
}

Dendrogram parse_dendrogram_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, std::string("dendrogram JSON: ") + e.what());
  }

  // Leaves first in class order, then merges in post-order.
  std::vector<Activity> leaves;
  std::function<void(const nlohmann::json&)> collect = [&](const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::SchemaError, "dendrogram node must be an object");
    if (j.contains("leaf")) {
      leaves.push_back(parse_activity(j.at("leaf").get<std::string>()));
      return;
    }
    if (!j.contains("left") || !j.contains("right") || !j.contains("height")) {
      throw Error(ErrorCode::SchemaError, "merge node needs left, right and height");
    }
    collect(j.at("left"));
    collect(j.at("right"));
  };
  collect(doc);
  std::sort(leaves.begin(), leaves.end());
  if (std::adjacent_find(leaves.begin(), leaves.end()) != leaves.end()) {
    throw Error(ErrorCode::SchemaError, "dendrogram repeats a leaf");
  }

  Dendrogram tree;
  for (Activity a : leaves) {
    Dendrogram::Node n;
    n.leaf = a;
    tree.nodes.push_back(n);
  }
  std::function<int(const nlohmann::json&)> build = [&](const nlohmann::json& j) -> int {
    if (j.contains("leaf")) {
      const Activity a = parse_activity(j.at("leaf").get<std::string>());
      return static_cast<int>(std::lower_bound(leaves.begin(), leaves.end(), a) - leaves.begin());
    }
    Dendrogram::Node n;
    n.left = build(j.at("left"));
    n.right = build(j.at("right"));
    if (!j.at("height").is_number()) throw Error(ErrorCode::SchemaError, "height must be a number");
    n.height = j.at("height").get<double>();
    tree.nodes.push_back(n);
    return static_cast<int>(tree.nodes.size() - 1);
  };
  build(doc);
  return tree;
}

}  // namespace emgds
