#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dispca/linalg.hpp"
#include "dispca/matrix.hpp"

namespace dispca::protocol {

/// The global point set split into node-local blocks. Concatenating the
/// blocks in node order is the protocol's view of P; the origin map
/// recovers the pre-partition row order.
struct PartitionedDataset {
  std::vector<Matrix> blocks;                    // P_1 .. P_s, each n_i x d
  Index dim_d = 0;
  std::vector<std::pair<int, Index>> origin;     // global row -> (node, local row)
  std::uint64_t partition_seed = 0;

  int node_count() const { return static_cast<int>(blocks.size()); }
  Index total_rows() const;
  /// Blocks stacked in node order (the protocol's P).
  Matrix concatenated() const;
  /// Rows restored to their pre-partition order via the origin map.
  Matrix restore_original() const;
};

enum class SvdBackend { Exact, Randomized };

struct SketchConfig {
  Index ell = 0;       // embedding rows; 0 lets the booster pick ceil(81 d^2/eps^2)
  double eps = 0.5;
  double delta = 0.1;  // overall failure budget; dispca splits it delta/(2s) per node
  bool boost = true;   // false applies a single constant-probability sketch
};

struct DisPcaParams {
  Index t1 = 1;
  Index t2 = 1;
  SvdBackend backend = SvdBackend::Exact;
  std::optional<SketchConfig> sketch;
  int rsvd_q = 2;
  std::uint64_t seed = 0;
  bool broadcast = false;  // account the downward V^(t2) messages
};

enum class MessageKind { LocalFactors, GlobalSubspace, CoresetPoints, Other };

std::string to_string(MessageKind kind);

/// One logged transfer; node 0 is the coordinator, nodes 1..s the
/// servers, and a word is a single real number.
struct Message {
  int from = 0;
  int to = 0;
  MessageKind kind = MessageKind::Other;
  std::int64_t words = 0;
};

struct Transcript {
  std::vector<Message> messages;
  std::int64_t total_words = 0;

  void add(int from, int to, MessageKind kind, std::int64_t words);
  void append(const Transcript& other);
  std::int64_t words_of_kind(MessageKind kind) const;
  /// Line-delimited JSON: one object per message with fields from, to,
  /// kind, words; a final object carries total_words.
  std::string to_jsonl() const;
};

/// Local summary plus the words it cost to ship.
struct LocalStageResult {
  linalg::SvdFactors summary;  // sigma/v padded to exactly t1 factors
  Transcript fragment;
};

struct DisPcaResult {
  linalg::Subspace subspace;  // d x t2
  Transcript transcript;
  std::vector<linalg::SvdFactors> local_summaries;
};

/// Seed for node i's local stage, derived so scheduling cannot change
/// the result.
std::uint64_t node_seed(std::uint64_t protocol_seed, int node);

/// Assigns each row independently to a node with probability
/// proportional to node weights drawn from a power law with exponent
/// alpha; empty blocks are repaired by moving one row from the largest
/// block.
PartitionedDataset partition_powerlaw(const Matrix& p, int s, double alpha,
                                      std::uint64_t seed);

/// Local stage of the protocol: optionally replaces the block with a
/// (boosted) sparse embedding, factors it with the configured backend,
/// and ships the leading t1 singular values and right singular vectors
/// (t1*d + t1 words). Blocks with rows <= cols skip the embedding (it
/// exists to shrink tall blocks and presumes n_i > d). Blocks with
/// fewer than t1 factors are padded with zero singular values and
/// orthonormal complement directions; the padded summary keeps u at
/// its natural width.
LocalStageResult local_stage(const Matrix& p_i, const DisPcaParams& params);

/// Global stage: stacks Y_i = Sigma_i^(t1) (V_i^(t1))^T, factors Y with
/// the configured backend and returns span(V^(t2)).
linalg::Subspace global_stage(const std::vector<linalg::SvdFactors>& summaries,
                              const DisPcaParams& params);

/// The two-stage protocol end to end, with exact word accounting.
DisPcaResult dispca(const PartitionedDataset& data, const DisPcaParams& params);

/// Every block replaced by its projection P_i E E^T; provenance kept.
PartitionedDataset projected_dataset(const PartitionedDataset& data,
                                     const linalg::Subspace& sub);

/// Both close-projection quantities for the proxy p_tilde of p against
/// a k-dimensional subspace, with the strict bound eps*d^2(P, span X)
/// and the relaxed bound that adds the eps*|PX|_F^2 slack used by the
/// sketched pipeline.
struct CloseProjectionReport {
  double diff_sq = 0.0;        // |P X - P~ X|_F^2
  double norm_gap = 0.0;       // |P X|_F^2 - |P~ X|_F^2
  double bound = 0.0;          // eps * d^2(P, span X)
  double relaxed_bound = 0.0;  // bound + eps * |P X|_F^2
  double c0 = 0.0;             // |P|_F^2 - |P~|_F^2
  bool strict_pass = false;
  bool relaxed_pass = false;
};

CloseProjectionReport verify_close_projection(const Matrix& p,
                                              const Matrix& p_tilde,
                                              const linalg::Subspace& x,
                                              double eps);

}  // namespace dispca::protocol
