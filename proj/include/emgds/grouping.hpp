#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "emgds/data.hpp"
#include "emgds/linalg.hpp"

namespace emgds {

/// Between-class Mahalanobis distances under the pooled within-class
/// covariance.
struct ClassSeparation {
  std::vector<Activity> class_order;  // classes present, canonical order
  std::vector<std::vector<double>> means;
  Matrix pooled_covariance;
  Matrix distances;  // K x K, symmetric, zero diagonal
  bool regularized = false;
};

ClassSeparation class_separation(std::span<const std::vector<double>> vectors,
                                 std::span<const Activity> labels);

/// Builds a ClassSeparation from a known pooled covariance and class means.
ClassSeparation separation_from_moments(std::vector<Activity> class_order,
                                        std::vector<std::vector<double>> means, Matrix pooled_covariance);

enum class Linkage { Single, Complete, Average };

std::string_view linkage_name(Linkage method) noexcept;
Linkage parse_linkage(std::string_view name);

/// Flat binary merge tree. Nodes [0, K) are leaves in class order; merges
/// follow in creation order and the last node is the root.
struct Dendrogram {
  struct Node {
    int left = -1;   // -1 for leaves
    int right = -1;
    double height = 0.0;
    Activity leaf = Activity::P;  // meaningful for leaves only

    bool is_leaf() const noexcept { return left < 0; }
    bool operator==(const Node&) const = default;
  };

  std::vector<Node> nodes;

  int root() const noexcept { return static_cast<int>(nodes.size()) - 1; }
  std::size_t leaf_count() const noexcept { return (nodes.size() + 1) / 2; }
  /// Leaves under `node`, sorted in class order.
  std::vector<Activity> leaves(int node) const;

  /// Structural equality: same shape, leaves and heights from the root
  /// down, regardless of the order merges are stored in.
  bool operator==(const Dendrogram& other) const;
};

/// Agglomerative clustering over the K classes of `sep.distances`. At each
/// step the closest pair merges; exact ties go to the pair whose smallest
/// member indices are lexicographically lowest. The cluster with the lower
/// index becomes the left child.
Dendrogram linkage(const ClassSeparation& sep, Linkage method = Linkage::Single);
Dendrogram linkage(const Matrix& distances, std::span<const Activity> classes,
                   Linkage method = Linkage::Single);

enum class DendrogramFormat { Json, Dot, Newick };

std::string export_dendrogram(const Dendrogram& tree, DendrogramFormat format);
/// Inverse of the Json export.
Dendrogram parse_dendrogram_json(std::string_view text);

}  // namespace emgds
