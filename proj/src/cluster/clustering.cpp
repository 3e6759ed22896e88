#include "kgaug/clustering.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "kgaug/error.hpp"

namespace kgaug {

using num::Tensor;

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

double sq_norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

Tensor centroids_of(const Tensor& points, const std::vector<std::size_t>& assignment, std::size_t l) {
  const std::size_t m = points.cols();
  Tensor c = Tensor::zeros(l, m);
  std::vector<std::size_t> count(l, 0);
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    auto dst = c.row(assignment[i]);
    auto src = points.row(i);
    for (std::size_t k = 0; k < m; ++k) dst[k] += src[k];
    ++count[assignment[i]];
  }
  for (std::size_t j = 0; j < l; ++j) {
    if (count[j] == 0) continue;
    for (double& v : c.row(j)) v /= static_cast<double>(count[j]);
  }
  return c;
}

// k-means++ seeding.
Tensor seed_centroids(const Tensor& points, std::size_t l, std::mt19937_64& rng) {
  const std::size_t n = points.rows(), m = points.cols();
  Tensor c = Tensor::zeros(l, m);
  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::size_t pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  for (std::size_t j = 0; j < l; ++j) {
    std::copy(points.row(pick).begin(), points.row(pick).end(), c.row(j).begin());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(points.row(i), c.row(j)));
      total += nearest[i];
    }
    if (j + 1 == l) break;
    if (total <= 0.0) {
      pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
      continue;
    }
    double u = std::uniform_real_distribution<double>(0.0, total)(rng);
    pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      u -= nearest[i];
      if (u < 0.0) {
        pick = i;
        break;
      }
    }
  }
  return c;
}

class Capacity {
 public:
  Capacity(std::size_t n, std::size_t l) : small_(n / l), big_left_(n % l), size_(l, 0) {}

  bool has_room(std::size_t c) const {
    if (size_[c] < small_) return true;
    return size_[c] == small_ && big_left_ > 0;
  }
  void take(std::size_t c) {
    if (size_[c] == small_) --big_left_;
    ++size_[c];
  }

 private:
  std::size_t small_;
  std::size_t big_left_;
  std::vector<std::size_t> size_;
};

std::vector<std::size_t> balanced_assign(const Tensor& points, const Tensor& centroids) {
  const std::size_t n = points.rows(), l = centroids.rows();
  std::vector<std::vector<double>> dist(n, std::vector<double>(l));
  std::vector<double> advantage(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < l; ++j) dist[i][j] = sq_dist(points.row(i), centroids.row(j));
    if (l > 1) {
      std::vector<double> d = dist[i];
      std::partial_sort(d.begin(), d.begin() + 2, d.end());
      advantage[i] = d[1] - d[0];
    }
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return advantage[a] > advantage[b]; });
  Capacity cap(n, l);
  std::vector<std::size_t> assignment(n, 0);
  for (std::size_t i : order) {
    std::size_t best = l;
    for (std::size_t j = 0; j < l; ++j) {
      if (cap.has_room(j) && (best == l || dist[i][j] < dist[i][best])) best = j;
    }
    cap.take(best);
    assignment[i] = best;
  }
  return assignment;
}

// Exact first-improvement local search over pairwise swaps and single moves
// from a ceil-sized to a floor-sized cluster. Uses SSE(A) = sum|x|^2 - |S_A|^2/n_A.
void refine(const Tensor& points, std::vector<std::size_t>& assignment, std::size_t l) {
  const std::size_t n = points.rows(), m = points.cols();
  std::vector<std::vector<double>> sums(l, std::vector<double>(m, 0.0));
  std::vector<std::size_t> count(l, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < m; ++k) sums[assignment[i]][k] += points.at(i, k);
    ++count[assignment[i]];
  }
  auto term = [](const std::vector<double>& s, std::size_t c) {
    return c == 0 ? 0.0 : sq_norm(s) / static_cast<double>(c);
  };
  std::vector<double> sa(m), sb(m);
  constexpr double eps = 1e-12;
  for (std::size_t pass = 0; pass < 100; ++pass) {
    bool improved = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t a = assignment[i], b = assignment[j];
        if (a == b) continue;
        // Candidate: swap i and j (j < i visited elsewhere; harmless).
        for (std::size_t k = 0; k < m; ++k) {
          sa[k] = sums[a][k] - points.at(i, k) + points.at(j, k);
          sb[k] = sums[b][k] - points.at(j, k) + points.at(i, k);
        }
        const double before = term(sums[a], count[a]) + term(sums[b], count[b]);
        const double after = term(sa, count[a]) + term(sb, count[b]);
        if (after > before + eps) {
          sums[a] = sa;
          sums[b] = sb;
          std::swap(assignment[i], assignment[j]);
          improved = true;
        }
      }
      // Move i to a cluster one smaller than its own.
      for (std::size_t b = 0; b < l; ++b) {
        const std::size_t a = assignment[i];
        if (b == a || count[a] != count[b] + 1) continue;
        for (std::size_t k = 0; k < m; ++k) {
          sa[k] = sums[a][k] - points.at(i, k);
          sb[k] = sums[b][k] + points.at(i, k);
        }
        const double before = term(sums[a], count[a]) + term(sums[b], count[b]);
        const double after = term(sa, count[a] - 1) + term(sb, count[b] + 1);
        if (after > before + eps) {
          sums[a] = sa;
          sums[b] = sb;
          --count[a];
          ++count[b];
          assignment[i] = b;
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
}

std::vector<std::size_t> run_once(const Tensor& points, const ClusterConfig& config, std::mt19937_64& rng) {
  const std::size_t l = config.clusters;
  Tensor centroids = seed_centroids(points, l, rng);
  std::vector<std::size_t> assignment = balanced_assign(points, centroids);
  std::vector<std::size_t> best = assignment;
  double best_obj = cluster_objective(points, assignment, l);
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    centroids = centroids_of(points, assignment, l);
    std::vector<std::size_t> next = balanced_assign(points, centroids);
    if (next == assignment) break;
    assignment = std::move(next);
    const double obj = cluster_objective(points, assignment, l);
    if (obj < best_obj) {
      best_obj = obj;
      best = assignment;
    }
  }
  refine(points, best, l);
  return best;
}

}  // namespace

double cluster_objective(const Tensor& points, const std::vector<std::size_t>& assignment,
                         std::size_t clusters) {
  const Tensor c = centroids_of(points, assignment, clusters);
  double total = 0.0;
  for (std::size_t i = 0; i < assignment.size(); ++i) total += sq_dist(points.row(i), c.row(assignment[i]));
  return total;
}

std::vector<Tensor> build_cluster_matrices(const std::vector<std::vector<std::size_t>>& members,
                                           const Tensor& points, std::size_t rows) {
  const std::size_t m = points.cols();
  std::vector<Tensor> out;
  out.reserve(members.size());
  for (const auto& ids : members) {
    if (ids.size() > rows) {
      throw DimensionError("cluster of " + std::to_string(ids.size()) + " members exceeds " +
                           std::to_string(rows) + " rows");
    }
    Tensor mat = Tensor::zeros(rows, m);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      if (ids[r] >= points.rows()) throw IndexError("cluster member out of range");
      std::copy(points.row(ids[r]).begin(), points.row(ids[r]).end(), mat.row(r).begin());
    }
    out.push_back(std::move(mat));
  }
  return out;
}

ClusterSet make_cluster_set(const Tensor& points, const std::vector<std::size_t>& assignment,
                            std::size_t clusters) {
  if (assignment.size() != points.rows()) {
    throw DimensionError("assignment covers " + std::to_string(assignment.size()) + " of " +
                         std::to_string(points.rows()) + " points");
  }
  ClusterSet set;
  set.assignment = assignment;
  set.members.assign(clusters, {});
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] >= clusters) throw IndexError("cluster index out of range");
    set.members[assignment[i]].push_back(i);
  }
  for (const auto& mem : set.members) set.rows = std::max(set.rows, mem.size());
  set.matrices = build_cluster_matrices(set.members, points, set.rows);
  set.objective = cluster_objective(points, assignment, clusters);
  return set;
}

ClusterSet balanced_kmeans(const Tensor& points, const ClusterConfig& config) {
  const std::size_t n = points.rows();
  if (config.clusters == 0) throw DomainError("cluster count must be at least 1");
  if (config.clusters > n) {
    throw DomainError("cannot form " + std::to_string(config.clusters) + " clusters from " +
                      std::to_string(n) + " points");
  }
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> best;
  double best_obj = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < std::max<std::size_t>(1, config.restarts); ++r) {
    std::vector<std::size_t> a = run_once(points, config, rng);
    const double obj = cluster_objective(points, a, config.clusters);
    if (obj < best_obj) {
      best_obj = obj;
      best = std::move(a);
    }
  }
  return make_cluster_set(points, best, config.clusters);
}

ClusterSet balanced_kmeans(const EmbeddingTable& table, const ClusterConfig& config) {
  return balanced_kmeans(table.vectors, config);
}

void write_clusters(std::ostream& out, const std::vector<std::string>& names, const ClusterSet& set) {
  if (names.size() != set.assignment.size()) throw DimensionError("names do not match the assignment");
  for (std::size_t i = 0; i < names.size(); ++i) out << names[i] << '\t' << set.assignment[i] << '\n';
}

std::vector<std::size_t> read_clusters(std::istream& in, const std::vector<std::string>& names,
                                       const std::string& source) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < names.size(); ++i) index.emplace(names[i], i);
  constexpr std::size_t unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> assignment(names.size(), unset);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(source, line_no, "expected id<TAB>cluster");
    auto it = index.find(line.substr(0, tab));
    if (it == index.end()) throw ParseError(source, line_no, "unknown id '" + line.substr(0, tab) + "'");
    std::size_t c = 0;
    try {
      std::size_t used = 0;
      c = std::stoul(line.substr(tab + 1), &used);
      if (used != line.size() - tab - 1) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ParseError(source, line_no, "bad cluster index");
    }
    assignment[it->second] = c;
  }
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (assignment[i] == unset) throw ParseError(source, line_no, "no cluster for '" + names[i] + "'");
  }
  return assignment;
}

std::vector<std::size_t> read_clusters(const std::filesystem::path& path,
                                       const std::vector<std::string>& names) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_clusters(in, names, path.string());
}

}  // namespace kgaug
