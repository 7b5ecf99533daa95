#pragma once

#include <cstdint>
#include <vector>

#include "dispca/linalg.hpp"
#include "dispca/matrix.hpp"
#include "dispca/protocol.hpp"

namespace dispca::clustering {

/// k centers with per-point assignment and the k-means cost d^2(P, X).
struct ClusteringSolution {
  Matrix centers;               // k x d
  std::vector<int> assignment;  // size n, values in [0, k)
  double cost = 0.0;
  std::vector<double> iteration_costs;  // Lloyd cost after each update
};

struct WeightedPoints {
  Matrix points;
  Vector weights;  // positive, one per row
};

enum class KmeansInit { KmeansPlusPlus, Forgy };

/// Exact nearest-center squared-distance sum; ties go to the lowest
/// center index.
double kmeans_cost(const Matrix& p, const Matrix& centers);

/// Nearest-center index per row under the same tie rule.
std::vector<int> assign_centers(const Matrix& p, const Matrix& centers);

/// d^2(P, X) when the centers are subspaces rather than points; the
/// verification-side cost functional for subspace clustering.
double subspace_cost(const Matrix& p, const std::vector<linalg::Subspace>& centers);

ClusteringSolution lloyd(const Matrix& p, Index k, KmeansInit init,
                         int max_iters, std::uint64_t seed);

/// Weighted Lloyd; reduces exactly to the unweighted version when all
/// weights are equal.
ClusteringSolution lloyd_weighted(const WeightedPoints& data, Index k,
                                  KmeansInit init, int max_iters,
                                  std::uint64_t seed);

struct KmeansOptions {
  Index projection_dim = 0;  // 0 derives k + ceil(4k/eps^2) - 1, clamped to d
  int local_iters = 50;
  int merge_iters = 100;
  protocol::SvdBackend backend = protocol::SvdBackend::Exact;
  std::optional<protocol::SketchConfig> sketch;
  int rsvd_q = 2;
};

/// What each node contributed to the coordinator round.
struct NodeContribution {
  int node = 0;
  Index local_k = 0;    // centers shipped (min(k, n_i))
  Index sampled = 0;    // cost-proportional sample allocated to this node
  double local_cost = 0.0;
};

struct DistributedKmeansResult {
  ClusteringSolution solution;  // centers lifted back to R^d
  protocol::Transcript transcript;
  linalg::Subspace subspace;
  std::vector<NodeContribution> nodes;
};

/// Distributed k-means: disPCA projection, local Lloyd per node, then a
/// coreset round in which every node ships its k weighted local centers
/// plus its share of `coreset_size` points sampled proportional to
/// their squared distance from the local centers (inverse-probability
/// weighted, with the sampled mass subtracted from the center weights).
/// The coordinator runs weighted Lloyd on the union in the projected
/// coordinates and lifts the centers back to R^d.
DistributedKmeansResult distributed_kmeans(const protocol::PartitionedDataset& data,
                                           Index k, double eps, Index coreset_size,
                                           std::uint64_t seed,
                                           const KmeansOptions& opts = {});

/// Seed of the coordinator's merge step, exposed so baselines can be
/// driven through the identical randomness.
std::uint64_t coordinator_seed(std::uint64_t seed);
/// Seed of node i's local Lloyd run.
std::uint64_t local_kmeans_seed(std::uint64_t seed, int node);

struct PcrResult {
  Vector coefficients;  // in subspace coordinates
  Vector lifted;        // basis * coefficients, in R^d
  double fit_error = 0.0;  // root-mean-square residual
};

/// Least squares of targets on the subspace coordinates of the
/// features, with an optional ridge term. ridge = 0 on singular normal
/// equations raises RankError.
PcrResult pcr(const Matrix& features, const Vector& targets,
              const linalg::Subspace& sub, double ridge = 0.0);

}  // namespace dispca::clustering
