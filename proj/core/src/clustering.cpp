#include "dispca/clustering.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "dispca/errors.hpp"
#include "dispca/rng.hpp"

namespace dispca::clustering {

namespace {

double sq_dist(const Eigen::Ref<const Eigen::RowVectorXd>& a,
               const Eigen::Ref<const Eigen::RowVectorXd>& b) {
  return (a - b).squaredNorm();
}

int nearest_center(const Matrix& centers, const Eigen::Ref<const Eigen::RowVectorXd>& p,
                   double* dist_out = nullptr) {
  int best = 0;
  double best_d = sq_dist(p, centers.row(0));
  for (Index j = 1; j < centers.rows(); ++j) {
    const double d = sq_dist(p, centers.row(j));
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  if (dist_out) *dist_out = best_d;
  return best;
}

Matrix init_centers(const WeightedPoints& data, Index k, KmeansInit init,
                    std::mt19937_64& rng) {
  const Index n = data.points.rows();
  Matrix centers(k, data.points.cols());
  if (init == KmeansInit::Forgy) {
    // k distinct rows chosen uniformly.
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    for (Index j = 0; j < k; ++j) centers.row(j) = data.points.row(idx[static_cast<std::size_t>(j)]);
    return centers;
  }
  // k-means++: first center weight-proportional, then weight * D^2.
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  auto pick = [&](const Vector& mass) {
    const double total = mass.sum();
    double u = uniform(rng) * total;
    for (Index i = 0; i < mass.size(); ++i) {
      u -= mass(i);
      if (u <= 0.0) return i;
    }
    return mass.size() - 1;
  };
  centers.row(0) = data.points.row(pick(data.weights));
  Vector d2(n);
  for (Index i = 0; i < n; ++i) d2(i) = sq_dist(data.points.row(i), centers.row(0));
  for (Index j = 1; j < k; ++j) {
    Vector mass = d2.cwiseProduct(data.weights);
    if (mass.sum() <= 0.0) {
      // All remaining mass on existing centers; duplicate any point.
      centers.row(j) = data.points.row(static_cast<Index>(j) % n);
      continue;
    }
    const Index chosen = pick(mass);
    centers.row(j) = data.points.row(chosen);
    for (Index i = 0; i < n; ++i)
      d2(i) = std::min(d2(i), sq_dist(data.points.row(i), centers.row(j)));
  }
  return centers;
}

}  // namespace

double kmeans_cost(const Matrix& p, const Matrix& centers) {
  if (centers.rows() == 0) throw std::invalid_argument("kmeans_cost: empty center set");
  if (p.cols() != centers.cols())
    throw std::invalid_argument("kmeans_cost: dimension mismatch");
  double cost = 0.0;
  for (Index i = 0; i < p.rows(); ++i) {
    double d = 0.0;
    nearest_center(centers, p.row(i), &d);
    cost += d;
  }
  return cost;
}

std::vector<int> assign_centers(const Matrix& p, const Matrix& centers) {
  if (centers.rows() == 0) throw std::invalid_argument("assign_centers: empty center set");
  std::vector<int> out(static_cast<std::size_t>(p.rows()));
  for (Index i = 0; i < p.rows(); ++i)
    out[static_cast<std::size_t>(i)] = nearest_center(centers, p.row(i));
  return out;
}

double subspace_cost(const Matrix& p, const std::vector<linalg::Subspace>& centers) {
  if (centers.empty()) throw std::invalid_argument("subspace_cost: empty center set");
  double cost = 0.0;
  for (Index i = 0; i < p.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& sub : centers) {
      const Eigen::RowVectorXd row = p.row(i);
      const Eigen::RowVectorXd proj = (row * sub.basis) * sub.basis.transpose();
      best = std::min(best, (row - proj).squaredNorm());
    }
    cost += best;
  }
  return cost;
}

ClusteringSolution lloyd(const Matrix& p, Index k, KmeansInit init, int max_iters,
                         std::uint64_t seed) {
  WeightedPoints data{p, Vector::Ones(p.rows())};
  return lloyd_weighted(data, k, init, max_iters, seed);
}

ClusteringSolution lloyd_weighted(const WeightedPoints& data, Index k,
                                  KmeansInit init, int max_iters,
                                  std::uint64_t seed) {
  const Index n = data.points.rows();
  if (k < 1 || k > n) throw std::invalid_argument("lloyd: k out of range");
  if (data.weights.size() != n)
    throw std::invalid_argument("lloyd: weight count mismatch");
  if (data.weights.minCoeff() <= 0.0)
    throw std::invalid_argument("lloyd: weights must be positive");

  auto rng = make_rng(seed);
  Matrix centers = init_centers(data, k, init, rng);

  ClusteringSolution sol;
  sol.assignment.assign(static_cast<std::size_t>(n), 0);

  auto weighted_cost = [&](const Matrix& c) {
    double cost = 0.0;
    for (Index i = 0; i < n; ++i) {
      double d = 0.0;
      nearest_center(c, data.points.row(i), &d);
      cost += data.weights(i) * d;
    }
    return cost;
  };

  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      const int a = nearest_center(centers, data.points.row(i));
      if (a != sol.assignment[static_cast<std::size_t>(i)]) {
        sol.assignment[static_cast<std::size_t>(i)] = a;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    Matrix sums = Matrix::Zero(k, data.points.cols());
    Vector mass = Vector::Zero(k);
    for (Index i = 0; i < n; ++i) {
      const int a = sol.assignment[static_cast<std::size_t>(i)];
      sums.row(a) += data.weights(i) * data.points.row(i);
      mass(a) += data.weights(i);
    }
    for (Index j = 0; j < k; ++j) {
      if (mass(j) > 0.0) {
        centers.row(j) = sums.row(j) / mass(j);
      } else {
        // Empty cluster: restart it at the current farthest point.
        Index far = 0;
        double far_d = -1.0;
        for (Index i = 0; i < n; ++i) {
          double d = 0.0;
          nearest_center(centers, data.points.row(i), &d);
          d *= data.weights(i);
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centers.row(j) = data.points.row(far);
      }
    }
    sol.iteration_costs.push_back(weighted_cost(centers));
  }

  sol.centers = centers;
  for (Index i = 0; i < n; ++i)
    sol.assignment[static_cast<std::size_t>(i)] =
        nearest_center(centers, data.points.row(i));
  sol.cost = weighted_cost(centers);
  return sol;
}

std::uint64_t coordinator_seed(std::uint64_t seed) { return mix_seed(seed, 0x30000); }

std::uint64_t local_kmeans_seed(std::uint64_t seed, int node) {
  return mix_seed(seed, 0x40000u + static_cast<std::uint64_t>(node));
}

DistributedKmeansResult distributed_kmeans(const protocol::PartitionedDataset& data,
                                           Index k, double eps, Index coreset_size,
                                           std::uint64_t seed,
                                           const KmeansOptions& opts) {
  if (k < 1) throw std::invalid_argument("distributed_kmeans: k must be >= 1");
  if (!(eps > 0.0 && eps < 1.0 / 3.0))
    throw std::invalid_argument("distributed_kmeans: eps out of (0, 1/3)");
  const int s = data.node_count();
  const Index d = data.dim_d;

  Index t = opts.projection_dim;
  if (t == 0) {
    t = k + static_cast<Index>(std::ceil(4.0 * static_cast<double>(k) / (eps * eps))) - 1;
    t = std::min(t, d);
  }
  if (t < 1 || t > d)
    throw std::invalid_argument("distributed_kmeans: projection dim out of range");

  protocol::DisPcaParams params;
  params.t1 = t;
  params.t2 = t;
  params.seed = seed;
  params.backend = opts.backend;
  params.sketch = opts.sketch;
  params.rsvd_q = opts.rsvd_q;
  params.broadcast = true;  // Algorithm sends E to all nodes
  protocol::DisPcaResult pca = protocol::dispca(data, params);

  DistributedKmeansResult out;
  out.subspace = pca.subspace;
  out.transcript = pca.transcript;
  const Matrix& basis = pca.subspace.basis;  // d x t

  // Local round: Lloyd in projected coordinates, then report the cost
  // (one word, used by the coordinator to allocate the sample budget).
  std::vector<Matrix> coords(static_cast<std::size_t>(s));
  std::vector<ClusteringSolution> local(static_cast<std::size_t>(s));
  std::vector<double> costs(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) {
    const Matrix& block = data.blocks[static_cast<std::size_t>(i)];
    coords[static_cast<std::size_t>(i)] = block * basis;  // n_i x t
    const Index ki = std::min<Index>(k, block.rows());
    local[static_cast<std::size_t>(i)] =
        lloyd_weighted({coords[static_cast<std::size_t>(i)],
                        Vector::Ones(block.rows())},
                       ki, KmeansInit::KmeansPlusPlus, opts.local_iters,
                       local_kmeans_seed(seed, i));
    costs[static_cast<std::size_t>(i)] = local[static_cast<std::size_t>(i)].cost;
    out.transcript.add(i + 1, 0, protocol::MessageKind::Other, 1);
  }

  // Cost-proportional allocation of the global sample budget, capped at
  // each node's point count, remainder redistributed.
  const double total_cost = std::accumulate(costs.begin(), costs.end(), 0.0);
  std::vector<Index> alloc(static_cast<std::size_t>(s), 0);
  if (total_cost > 0.0 && coreset_size > 0) {
    std::vector<double> share(static_cast<std::size_t>(s));
    Index assigned = 0;
    for (int i = 0; i < s; ++i) {
      const double exact = coreset_size * costs[static_cast<std::size_t>(i)] / total_cost;
      alloc[static_cast<std::size_t>(i)] = static_cast<Index>(std::floor(exact));
      share[static_cast<std::size_t>(i)] = exact - std::floor(exact);
      assigned += alloc[static_cast<std::size_t>(i)];
    }
    std::vector<int> order(static_cast<std::size_t>(s));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return share[static_cast<std::size_t>(a)] > share[static_cast<std::size_t>(b)];
    });
    for (int i : order) {
      if (assigned >= coreset_size) break;
      if (costs[static_cast<std::size_t>(i)] > 0.0) {
        ++alloc[static_cast<std::size_t>(i)];
        ++assigned;
      }
    }
    // Cap at node size and push the excess to nodes with room.
    for (int round = 0; round < s; ++round) {
      Index excess = 0;
      for (int i = 0; i < s; ++i) {
        const Index cap = data.blocks[static_cast<std::size_t>(i)].rows();
        if (alloc[static_cast<std::size_t>(i)] > cap) {
          excess += alloc[static_cast<std::size_t>(i)] - cap;
          alloc[static_cast<std::size_t>(i)] = cap;
        }
      }
      if (excess == 0) break;
      for (int i = 0; i < s && excess > 0; ++i) {
        const Index cap = data.blocks[static_cast<std::size_t>(i)].rows();
        if (costs[static_cast<std::size_t>(i)] > 0.0 &&
            alloc[static_cast<std::size_t>(i)] < cap) {
          const Index take = std::min(excess, cap - alloc[static_cast<std::size_t>(i)]);
          alloc[static_cast<std::size_t>(i)] += take;
          excess -= take;
        }
      }
      if (excess > 0) break;  // every node saturated
    }
  }

  // Coreset round: centers weighted by cluster size minus the sampled
  // mass landing in that cluster, plus inverse-probability-weighted
  // sample points. A node whose sample covers all its points ships them
  // with unit weight and its centers drop out.
  std::vector<Eigen::RowVectorXd> merged_points;
  std::vector<double> merged_weights;
  for (int i = 0; i < s; ++i) {
    const Matrix& pts = coords[static_cast<std::size_t>(i)];
    const ClusteringSolution& sol = local[static_cast<std::size_t>(i)];
    const Index ni = pts.rows();
    const Index ki = sol.centers.rows();
    const Index mi = alloc[static_cast<std::size_t>(i)];

    Vector center_mass = Vector::Zero(ki);
    for (Index r = 0; r < ni; ++r)
      center_mass(sol.assignment[static_cast<std::size_t>(r)]) += 1.0;

    Index shipped = 0;
    if (mi >= ni && ni > 0) {
      for (Index r = 0; r < ni; ++r) {
        merged_points.push_back(pts.row(r));
        merged_weights.push_back(1.0);
      }
      center_mass.setZero();
      shipped = ni;
    } else if (mi > 0 && sol.cost > 0.0) {
      Vector point_d2(ni);
      for (Index r = 0; r < ni; ++r)
        point_d2(r) = sq_dist(pts.row(r),
                              sol.centers.row(sol.assignment[static_cast<std::size_t>(r)]));
      auto rng = make_rng(mix_seed(seed, 0x50000u + static_cast<std::uint64_t>(i)));
      std::uniform_real_distribution<double> uniform(0.0, 1.0);
      Vector cdf(ni);
      double acc = 0.0;
      for (Index r = 0; r < ni; ++r) {
        acc += point_d2(r) / sol.cost;
        cdf(r) = acc;
      }
      cdf(ni - 1) = 1.0;
      for (Index draw = 0; draw < mi; ++draw) {
        const double u = uniform(rng);
        Index r = 0;
        while (r < ni - 1 && cdf(r) < u) ++r;
        const double prob = point_d2(r) / sol.cost;
        const double w = 1.0 / (static_cast<double>(mi) * prob);
        merged_points.push_back(pts.row(r));
        merged_weights.push_back(w);
        center_mass(sol.assignment[static_cast<std::size_t>(r)]) -= w;
      }
      shipped = mi;
    }

    for (Index j = 0; j < ki; ++j) {
      if (center_mass(j) <= 0.0) continue;  // oversampled clusters drop out
      merged_points.push_back(sol.centers.row(j));
      merged_weights.push_back(center_mass(j));
    }

    out.transcript.add(i + 1, 0, protocol::MessageKind::CoresetPoints,
                       ki * t + ki + shipped * (t + 1));
    out.nodes.push_back({i, ki, shipped, sol.cost});
  }

  WeightedPoints merged;
  merged.points.resize(static_cast<Index>(merged_points.size()), t);
  merged.weights.resize(static_cast<Index>(merged_points.size()));
  for (std::size_t r = 0; r < merged_points.size(); ++r) {
    merged.points.row(static_cast<Index>(r)) = merged_points[r];
    merged.weights(static_cast<Index>(r)) = merged_weights[r];
  }

  const Index kk = std::min<Index>(k, merged.points.rows());
  ClusteringSolution merged_sol = lloyd_weighted(
      merged, kk, KmeansInit::KmeansPlusPlus, opts.merge_iters, coordinator_seed(seed));

  // Lift the centers back to the original coordinates and price the
  // solution on the full data.
  Matrix lifted = merged_sol.centers * basis.transpose();  // k x d
  const Matrix global = data.concatenated();
  out.solution.centers = lifted;
  out.solution.assignment = assign_centers(global, lifted);
  out.solution.cost = kmeans_cost(global, lifted);
  out.solution.iteration_costs = merged_sol.iteration_costs;
  return out;
}

PcrResult pcr(const Matrix& features, const Vector& targets,
              const linalg::Subspace& sub, double ridge) {
  if (targets.size() != features.rows())
    throw std::invalid_argument("pcr: target count mismatch");
  if (features.cols() != sub.basis.rows())
    throw std::invalid_argument("pcr: subspace dimension mismatch");
  if (ridge < 0.0) throw std::invalid_argument("pcr: ridge must be >= 0");

  const Matrix z = features * sub.basis;  // n x t
  const Index t = z.cols();
  Matrix normal = z.transpose() * z;
  normal.diagonal().array() += ridge;
  if (ridge == 0.0) {
    Eigen::ColPivHouseholderQR<Matrix> qr(normal);
    if (qr.rank() < t)
      throw RankError("pcr: singular normal equations with ridge = 0");
  }
  const Vector coef = Eigen::LDLT<Matrix>(normal).solve(z.transpose() * targets);
  PcrResult out;
  out.coefficients = coef;
  out.lifted = sub.basis * coef;
  out.fit_error = std::sqrt((z * coef - targets).squaredNorm() /
                            static_cast<double>(features.rows()));
  return out;
}

}  // namespace dispca::clustering
