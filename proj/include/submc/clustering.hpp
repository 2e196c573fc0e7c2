#ifndef SUBMC_CLUSTERING_HPP
#define SUBMC_CLUSTERING_HPP

#include "submc/models.hpp"
#include "submc/types.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace submc
{

/// Per-dimension z-scoring with the full-data mean and standard deviation.
/// Constant dimensions keep unit scale.
struct Standardizer
{
  Vector mean;
  Vector scale;

  static Standardizer fit(const DataMatrix& data);
  DataMatrix apply(const DataMatrix& data) const;
  Vector apply(const Vector& z) const;
};

struct ClusterSet
{
  double epsilon = 0.0;
  // One row per cluster, in standardized space.
  DataMatrix centroids;
  std::vector<std::size_t> seeds;
  std::vector<std::size_t> assignments;
  std::vector<std::size_t> counts;
  // Largest member distance to the founding seed and to the final centroid.
  double max_seed_distance = 0.0;
  double max_centroid_distance = 0.0;

  std::size_t clusters() const { return counts.size(); }
  std::size_t points() const { return assignments.size(); }
  /// Members of every cluster in ascending point order.
  std::vector<std::vector<std::size_t>> members() const;
};

/// Greedy epsilon-ball clustering of standardized points. Each unclustered
/// point, in index order, founds a cluster of every still unclustered point
/// within `epsilon` of it.
ClusterSet cluster_epsilon_ball(const DataMatrix& standardized, double epsilon);

/// Theta-independent statistics of one cluster in the model's data space.
struct CentroidSummary
{
  Vector centroid;
  std::size_t count = 0;
  Vector deviation_sum;
  Matrix deviation_outer_sum;
  // Refreshed for the current theta by proxy_total.
  double loglik_at_centroid = 0.0;
};

/// `points` holds one raw data-space point per row, aligned with the
/// clustering. Centroids are member means in raw space.
std::vector<CentroidSummary> precompute_centroid_statistics(const DataMatrix& points,
                                                            const ClusterSet& clusters);

/// l(c) + g'(z - c) + (z - c)' H (z - c) / 2.
double taylor_proxy(const Vector& z, const CentroidSummary& summary,
                    const DataDerivatives& at_centroid);

/// Sum over clusters of N_j l(c_j) + g_j's_j + sum(H_j o B_j) / 2, together
/// with the number of centroid evaluations it cost. When `fixed_hessians`
/// is given, its matrices replace the theta-dependent Hessians. The centroid
/// derivatives are stored in `derivatives` when it is not null.
std::pair<double, std::size_t> proxy_total(const Vector& theta, const Model& model,
                                           std::vector<CentroidSummary>& summaries,
                                           const std::vector<Matrix>* fixed_hessians = nullptr,
                                           std::vector<DataDerivatives>* derivatives = nullptr);

/// Binary sidecar holding a clustering and its statistics. `key` identifies
/// the dataset and epsilon; loading with a different key returns nothing.
std::uint64_t clustering_key(const DataMatrix& points, double epsilon);
void save_clustering(const std::filesystem::path& path, std::uint64_t key,
                     const ClusterSet& clusters, const std::vector<CentroidSummary>& summaries);
std::optional<std::pair<ClusterSet, std::vector<CentroidSummary>>>
load_clustering(const std::filesystem::path& path, std::uint64_t key);

} // namespace submc

#endif
