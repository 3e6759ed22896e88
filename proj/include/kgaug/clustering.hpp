#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "kgaug/kg_embed.hpp"
#include "kgaug/numerics/tensor.hpp"

namespace kgaug {

struct ClusterConfig {
  std::size_t clusters = 20;
  std::size_t max_iterations = 100;
  std::size_t restarts = 5;
  std::uint64_t seed = 1;
};

struct ClusterSet {
  std::vector<std::size_t> assignment;         // id -> cluster
  std::vector<std::vector<std::size_t>> members;  // cluster -> ids, ascending
  std::size_t rows = 0;                        // q = ceil(N / l)
  std::vector<num::Tensor> matrices;           // l matrices, q x m, zero-padded
  double objective = 0.0;                      // within-cluster sum of squares

  std::size_t size() const { return members.size(); }
};

// Within-cluster sum of squared distances to the cluster means.
double cluster_objective(const num::Tensor& points, const std::vector<std::size_t>& assignment,
                         std::size_t clusters);

// Lloyd iterations whose assignment step is capacity constrained (points
// ordered by the margin between their two nearest centroids, each taking the
// nearest cluster with room), followed by an exact swap/move local search.
// Cluster sizes are floor(N/l) or ceil(N/l). Best of `restarts` seeded runs.
ClusterSet balanced_kmeans(const num::Tensor& points, const ClusterConfig& config);
ClusterSet balanced_kmeans(const EmbeddingTable& table, const ClusterConfig& config);

// Rebuilds members/rows/matrices from an assignment (e.g. a loaded dump).
ClusterSet make_cluster_set(const num::Tensor& points, const std::vector<std::size_t>& assignment,
                            std::size_t clusters);

// Member rows stacked in the order given, zero rows appended up to `rows`.
std::vector<num::Tensor> build_cluster_matrices(const std::vector<std::vector<std::size_t>>& members,
                                                const num::Tensor& points, std::size_t rows);

void write_clusters(std::ostream& out, const std::vector<std::string>& names, const ClusterSet& set);
// Returns the assignment in `names` order.
std::vector<std::size_t> read_clusters(std::istream& in, const std::vector<std::string>& names,
                                       const std::string& source = "<stream>");
std::vector<std::size_t> read_clusters(const std::filesystem::path& path,
                                       const std::vector<std::string>& names);

}  // namespace kgaug
