#include "dispca/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "dispca/errors.hpp"
#include "dispca/rng.hpp"
#include "dispca/rsvd.hpp"
#include "dispca/sketching.hpp"

namespace dispca::protocol {

namespace {

int max_workers() {
  if (const char* env = std::getenv("DISPCA_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// Pads sigma with zeros and v with orthonormal complement columns so
// the summary carries exactly `width` factors. u keeps its natural
// width; only (sigma, v) travel in protocol messages.
linalg::SvdFactors pad_factors(linalg::SvdFactors f, Index width) {
  const Index have = f.count();
  if (have >= width) return have == width ? f : linalg::truncate(f, width);
  Vector sigma = Vector::Zero(width);
  sigma.head(have) = f.sigma;
  f.sigma = std::move(sigma);
  f.v = linalg::complete_basis(f.v, width);
  return f;
}

// Factorization used by both stages: exact or randomized, always
// returning exactly `width` factors.
linalg::SvdFactors summarize(const Matrix& a, Index width,
                             const DisPcaParams& params, std::uint64_t seed) {
  const Index m = std::min(a.rows(), a.cols());
  if (params.backend == SvdBackend::Randomized && m >= 2) {
    rsvd::RsvdParams rp;
    rp.target_rank_t = std::min((width + 1) / 2, m / 2);
    rp.power_iterations_q = params.rsvd_q;
    rp.seed = seed;
    return pad_factors(rsvd::randomized_svd(a, rp), width);
  }
  return pad_factors(linalg::svd(a), width);
}

}  // namespace

Index PartitionedDataset::total_rows() const {
  Index n = 0;
  for (const Matrix& b : blocks) n += b.rows();
  return n;
}

Matrix PartitionedDataset::concatenated() const {
  Matrix out(total_rows(), dim_d);
  Index at = 0;
  for (const Matrix& b : blocks) {
    out.middleRows(at, b.rows()) = b;
    at += b.rows();
  }
  return out;
}

Matrix PartitionedDataset::restore_original() const {
  Matrix out(static_cast<Index>(origin.size()), dim_d);
  for (std::size_t i = 0; i < origin.size(); ++i) {
    const auto& [node, local] = origin[i];
    out.row(static_cast<Index>(i)) = blocks[static_cast<std::size_t>(node)].row(local);
  }
  return out;
}

std::string to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::LocalFactors: return "local-factors";
    case MessageKind::GlobalSubspace: return "global-subspace";
    case MessageKind::CoresetPoints: return "coreset-points";
    case MessageKind::Other: return "other";
  }
  return "other";
}

void Transcript::add(int from, int to, MessageKind kind, std::int64_t words) {
  messages.push_back({from, to, kind, words});
  total_words += words;
}

void Transcript::append(const Transcript& other) {
  messages.insert(messages.end(), other.messages.begin(), other.messages.end());
  total_words += other.total_words;
}

std::int64_t Transcript::words_of_kind(MessageKind kind) const {
  std::int64_t sum = 0;
  for (const Message& m : messages)
    if (m.kind == kind) sum += m.words;
  return sum;
}

std::string Transcript::to_jsonl() const {
  std::ostringstream out;
  for (const Message& m : messages) {
    nlohmann::json j{{"from", m.from},
                     {"to", m.to},
                     {"kind", to_string(m.kind)},
                     {"words", m.words}};
    out << j.dump() << '\n';
  }
  out << nlohmann::json{{"total_words", total_words}}.dump() << '\n';
  return out.str();
}

std::uint64_t node_seed(std::uint64_t protocol_seed, int node) {
  return mix_seed(protocol_seed, 0x10000u + static_cast<std::uint64_t>(node));
}

PartitionedDataset partition_powerlaw(const Matrix& p, int s, double alpha,
                                      std::uint64_t seed) {
  if (s < 1) throw std::invalid_argument("partition_powerlaw: s must be >= 1");
  if (p.rows() < s)
    throw std::invalid_argument("partition_powerlaw: fewer rows than nodes");
  if (alpha <= 1.0) throw std::invalid_argument("partition_powerlaw: alpha must be > 1");

  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  // Pareto draw with density ~ w^{-alpha} on [1, inf).
  std::vector<double> weights(static_cast<std::size_t>(s));
  double total = 0.0;
  for (double& w : weights) {
    double u = uniform(rng);
    while (u == 0.0) u = uniform(rng);
    w = std::pow(u, -1.0 / (alpha - 1.0));
    total += w;
  }
  std::vector<double> cdf(weights.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i] / total;
    cdf[i] = acc;
  }
  cdf.back() = 1.0;

  const Index n = p.rows();
  std::vector<std::vector<Index>> rows_of(static_cast<std::size_t>(s));
  std::vector<int> node_of(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double u = uniform(rng);
    const int node = static_cast<int>(
        std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    node_of[static_cast<std::size_t>(i)] = node;
    rows_of[static_cast<std::size_t>(node)].push_back(i);
  }

  // Repair empty blocks from the largest one.
  for (std::size_t node = 0; node < rows_of.size(); ++node) {
    if (!rows_of[node].empty()) continue;
    std::size_t donor = 0;
    for (std::size_t j = 1; j < rows_of.size(); ++j)
      if (rows_of[j].size() > rows_of[donor].size()) donor = j;
    Index moved = rows_of[donor].back();
    rows_of[donor].pop_back();
    rows_of[node].push_back(moved);
    node_of[static_cast<std::size_t>(moved)] = static_cast<int>(node);
  }

  PartitionedDataset out;
  out.dim_d = p.cols();
  out.partition_seed = seed;
  out.origin.resize(static_cast<std::size_t>(n));
  out.blocks.reserve(static_cast<std::size_t>(s));
  for (std::size_t node = 0; node < rows_of.size(); ++node) {
    Matrix block(static_cast<Index>(rows_of[node].size()), p.cols());
    for (std::size_t local = 0; local < rows_of[node].size(); ++local) {
      const Index global = rows_of[node][local];
      block.row(static_cast<Index>(local)) = p.row(global);
      out.origin[static_cast<std::size_t>(global)] = {static_cast<int>(node),
                                                      static_cast<Index>(local)};
    }
    out.blocks.push_back(std::move(block));
  }
  return out;
}

LocalStageResult local_stage(const Matrix& p_i, const DisPcaParams& params) {
  if (params.t1 < 1 || params.t2 < 1 || params.t2 > params.t1)
    throw std::invalid_argument("local_stage: need 1 <= t2 <= t1");

  Matrix working = p_i;
  // Embeddings only make sense for blocks taller than they are wide;
  // a block at or below d rows is already its own best summary.
  if (params.sketch && p_i.rows() > p_i.cols()) {
    const SketchConfig& cfg = *params.sketch;
    if (cfg.boost) {
      working = sketching::boost_embedding(p_i, cfg.eps, cfg.delta,
                                           mix_seed(params.seed, 1), cfg.ell)
                    .embedded;
    } else {
      const Index ell =
          cfg.ell > 0 ? cfg.ell
                      : static_cast<Index>(std::ceil(
                            static_cast<double>(p_i.cols() * p_i.cols()) /
                            (cfg.eps * cfg.eps)));
      auto plan = sketching::plan_countsketch(p_i.rows(), ell, mix_seed(params.seed, 1));
      working = sketching::apply_countsketch(plan, p_i);
    }
  }

  LocalStageResult out;
  out.summary = summarize(working, params.t1, params, mix_seed(params.seed, 2));
  out.fragment.add(/*from=*/1, /*to=*/0, MessageKind::LocalFactors,
                   params.t1 * p_i.cols() + params.t1);
  return out;
}

linalg::Subspace global_stage(const std::vector<linalg::SvdFactors>& summaries,
                              const DisPcaParams& params) {
  if (summaries.empty())
    throw std::invalid_argument("global_stage: no summaries");
  const Index d = summaries.front().v.rows();
  Index rows = 0;
  for (const auto& f : summaries) {
    if (f.v.rows() != d)
      throw std::invalid_argument("global_stage: summaries disagree on d");
    rows += f.count();
  }
  Matrix y(rows, d);
  Index at = 0;
  for (const auto& f : summaries) {
    y.middleRows(at, f.count()) = f.sigma.asDiagonal() * f.v.transpose();
    at += f.count();
  }
  linalg::SvdFactors global =
      summarize(y, params.t2, params, mix_seed(params.seed, 0x20000));
  return linalg::Subspace{global.v};
}

DisPcaResult dispca(const PartitionedDataset& data, const DisPcaParams& params) {
  const int s = data.node_count();
  if (s < 1) throw std::invalid_argument("dispca: empty dataset");
  if (params.t1 > data.dim_d)
    throw std::invalid_argument("dispca: t1 exceeds the data dimension");

  // Per-node parameter view: derived seed, local share of the failure
  // budget. Seeds depend only on the node index, so the parallel and
  // serial schedules produce identical transcripts.
  auto node_params = [&](int i) {
    DisPcaParams np = params;
    np.seed = node_seed(params.seed, i);
    if (np.sketch) np.sketch->delta = params.sketch->delta / (2.0 * s);
    return np;
  };

  std::vector<LocalStageResult> locals(static_cast<std::size_t>(s));
  const int workers = std::min(max_workers(), s);
  if (workers <= 1 || s == 1) {
    for (int i = 0; i < s; ++i)
      locals[static_cast<std::size_t>(i)] =
          local_stage(data.blocks[static_cast<std::size_t>(i)], node_params(i));
  } else {
    // Stripe the nodes over a bounded set of workers; results land in
    // per-node slots so scheduling cannot reorder anything.
    std::vector<std::future<void>> futures;
    futures.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
      futures.push_back(std::async(std::launch::async, [&, w] {
        for (int i = w; i < s; i += workers)
          locals[static_cast<std::size_t>(i)] =
              local_stage(data.blocks[static_cast<std::size_t>(i)], node_params(i));
      }));
    for (auto& f : futures) f.get();
  }

  DisPcaResult out;
  out.local_summaries.reserve(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) {
    auto& local = locals[static_cast<std::size_t>(i)];
    for (Message m : local.fragment.messages) {
      m.from = i + 1;
      out.transcript.add(m.from, m.to, m.kind, m.words);
    }
    out.local_summaries.push_back(std::move(local.summary));
  }

  out.subspace = global_stage(out.local_summaries, params);

  if (params.broadcast)
    for (int i = 0; i < s; ++i)
      out.transcript.add(0, i + 1, MessageKind::GlobalSubspace,
                         params.t2 * data.dim_d);
  return out;
}

PartitionedDataset projected_dataset(const PartitionedDataset& data,
                                     const linalg::Subspace& sub) {
  if (data.dim_d != sub.basis.rows())
    throw std::invalid_argument("projected_dataset: dimension mismatch");
  PartitionedDataset out = data;
  for (Matrix& block : out.blocks) block = linalg::project(block, sub);
  return out;
}

CloseProjectionReport verify_close_projection(const Matrix& p,
                                              const Matrix& p_tilde,
                                              const linalg::Subspace& x,
                                              double eps) {
  if (p.rows() != p_tilde.rows() || p.cols() != p_tilde.cols())
    throw std::invalid_argument("verify_close_projection: shape mismatch");
  if (p.cols() != x.basis.rows())
    throw std::invalid_argument("verify_close_projection: subspace dimension mismatch");

  const Matrix px = p * x.basis;
  const Matrix ptx = p_tilde * x.basis;
  CloseProjectionReport rep;
  rep.diff_sq = (px - ptx).squaredNorm();
  rep.norm_gap = px.squaredNorm() - ptx.squaredNorm();
  rep.bound = eps * linalg::dist_sq(p, x);
  rep.relaxed_bound = rep.bound + eps * px.squaredNorm();
  rep.c0 = p.squaredNorm() - p_tilde.squaredNorm();

  constexpr double kLowerSlack = 1e-8;
  rep.strict_pass = rep.diff_sq >= -kLowerSlack && rep.diff_sq <= rep.bound &&
                    rep.norm_gap >= -kLowerSlack && rep.norm_gap <= rep.bound;
  rep.relaxed_pass = rep.diff_sq <= rep.relaxed_bound &&
                     std::abs(rep.norm_gap) <= rep.relaxed_bound;
  return rep;
}

}  // namespace dispca::protocol
