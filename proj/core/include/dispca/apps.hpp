#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dispca/matrix.hpp"

namespace dispca::apps {

enum class Task { Lowrank, Kmeans, Pcr };
enum class DataFormat { CsvDense, MatrixMarket, Libsvm };
enum class Backend { Exact, Fast };

struct ExperimentConfig {
  Task task = Task::Lowrank;
  std::string dataset_path;  // empty: synthesize per task
  DataFormat format = DataFormat::CsvDense;
  int s = 25;              // nodes
  double alpha = 2.0;      // partition power-law exponent
  Index rank_or_k = 10;    // r for lowrank, k for kmeans/pcr baseline rank
  double eps = 0.5;
  std::vector<Index> projection_dims;
  Backend backend = Backend::Exact;
  Index sketch_ell = 0;    // 0: booster default sizing
  bool boost = true;
  int rsvd_q = 0;          // 0: derived default
  int repetitions = 1;
  std::uint64_t seed = 0;
  std::string output_path;
  Index coreset_size = 200;
  double ridge = 0.0;
  Index target_column = -1;  // pcr: -1 means last column
  double timeout_seconds = 600.0;
  bool zero_timing = false;  // write wall_time_ms as 0 for byte-stable output
  // Synthetic fallbacks when dataset_path is empty.
  Index synth_rows = 2000;
  Index synth_cols = 30;
};

struct ResultRow {
  Index projection_dim = 0;
  double ratio = 0.0;
  double wall_time_ms = 0.0;
  std::int64_t comm_words = 0;
  std::uint64_t seed = 0;
};

struct RunOutput {
  std::vector<ResultRow> rows;
  double baseline = 0.0;  // global-solution metric all ratios divide by
  std::string task;
};

struct LoadedDataset {
  Matrix features;
  Vector targets;  // size 0 when the format carries none
};

/// Reads csv-dense, MatrixMarket coordinate, or libsvm files into a
/// dense matrix. dim_hint fixes the column count for libsvm inputs
/// whose trailing features are absent.
LoadedDataset load_dataset(const std::string& path, DataFormat format,
                           Index dim_hint = 0);

// Synthetic inputs used by the experiment harness and the test suites.

/// U diag(i^-decay) V^T with Haar-random orthonormal factors.
Matrix spectrum_matrix(Index n, Index d, double decay, std::uint64_t seed);
/// k spherical Gaussian components; means drawn in a means_rank-dim
/// subspace when means_rank > 0, full-dimensional otherwise.
Matrix gaussian_mixture(Index n, Index d, Index k, double separation,
                        double noise, std::uint64_t seed, Index means_rank = 0);
Matrix lowrank_plus_noise(Index n, Index d, Index rank, double noise,
                          std::uint64_t seed);
/// Dense storage, but only ~density of the entries are nonzero.
Matrix sparse_random(Index n, Index d, double density, std::uint64_t seed);
/// Regression pair: low-rank features plus targets linear in the top
/// principal coordinates with additive noise.
std::pair<Matrix, Vector> pcr_synthetic(Index n, Index d, Index rank,
                                        double noise, std::uint64_t seed);

RunOutput run_lowrank(const ExperimentConfig& cfg);
RunOutput run_kmeans(const ExperimentConfig& cfg);
RunOutput run_pcr(const ExperimentConfig& cfg);

/// Writes rows as <base>.json (full fidelity, includes the baseline)
/// and <base>.csv with the fixed header
/// projection_dim,ratio,wall_time_ms,comm_words.
void emit_results(const RunOutput& out, const std::string& base_path);

/// Reads back the JSON emitted above.
RunOutput parse_results(const std::string& json_path);

/// Property checks behind the `verify` subcommand: close projection,
/// the approximation-ratio and cost-sandwich guarantees, and the fast
/// pipeline's relaxed sandwich, on synthetic data. Prints one line per
/// check; returns false if any failed.
bool run_verify(std::uint64_t seed, std::ostream& log);

}  // namespace dispca::apps
