#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dispca/apps.hpp"

namespace {

using dispca::apps::Backend;
using dispca::apps::DataFormat;
using dispca::apps::ExperimentConfig;
using dispca::apps::RunOutput;
using dispca::apps::Task;

void add_common_flags(CLI::App* cmd, ExperimentConfig& cfg, std::string& format,
                      std::string& backend, std::string& dims) {
  cmd->add_option("--data", cfg.dataset_path, "dataset file; synthetic data when omitted");
  cmd->add_option("--format", format, "csv | matrix-market | libsvm")
      ->check(CLI::IsMember({"csv", "matrix-market", "libsvm"}));
  cmd->add_option("--nodes", cfg.s, "number of nodes")->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", cfg.alpha, "partition power-law exponent");
  cmd->add_option("--eps", cfg.eps, "accuracy parameter");
  cmd->add_option("--dims", dims, "comma-separated projection dimensions")->required();
  cmd->add_option("--backend", backend, "exact | fast")
      ->check(CLI::IsMember({"exact", "fast"}));
  cmd->add_option("--sketch-rows", cfg.sketch_ell,
                  "embedding rows for the fast backend (0: default sizing)");
  cmd->add_flag("!--no-boost", cfg.boost, "skip the success-probability booster");
  cmd->add_option("--rsvd-q", cfg.rsvd_q, "power iterations (0: derived default)");
  cmd->add_option("--reps", cfg.repetitions, "repetitions per projection dimension");
  cmd->add_option("--seed", cfg.seed, "random seed");
  cmd->add_option("--out", cfg.output_path, "output base path (.json/.csv)")->required();
  cmd->add_option("--timeout", cfg.timeout_seconds, "soft time limit in seconds");
  cmd->add_option("--rows", cfg.synth_rows, "synthetic data rows");
  cmd->add_option("--cols", cfg.synth_cols, "synthetic data columns");
  cmd->add_flag("--zero-timing", cfg.zero_timing,
                "write wall_time_ms as 0 for reproducible output files");
}

void finish_config(ExperimentConfig& cfg, const std::string& format,
                   const std::string& backend, const std::string& dims) {
  if (format == "matrix-market") cfg.format = DataFormat::MatrixMarket;
  else if (format == "libsvm") cfg.format = DataFormat::Libsvm;
  else cfg.format = DataFormat::CsvDense;
  cfg.backend = backend == "fast" ? Backend::Fast : Backend::Exact;
  cfg.projection_dims.clear();
  std::size_t at = 0;
  while (at < dims.size()) {
    const std::size_t comma = dims.find(',', at);
    const std::string tok = dims.substr(at, comma == std::string::npos ? dims.npos : comma - at);
    if (!tok.empty()) cfg.projection_dims.push_back(std::stol(tok));
    if (comma == std::string::npos) break;
    at = comma + 1;
  }
}

void print_rows(const RunOutput& out) {
  std::cout << "task " << out.task << ", baseline " << out.baseline << "\n";
  for (const auto& r : out.rows)
    std::cout << "  dim " << r.projection_dim << ": ratio " << r.ratio << ", "
              << r.comm_words << " words, " << r.wall_time_ms << " ms\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"communication-efficient distributed PCA experiments"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string format = "csv";
  std::string backend = "exact";
  std::string dims;

  auto* lowrank = app.add_subcommand("lowrank", "rank-r approximation ratio sweep");
  lowrank->add_option("--rank", cfg.rank_or_k, "target rank r");
  add_common_flags(lowrank, cfg, format, backend, dims);

  auto* kmeans = app.add_subcommand("kmeans", "distributed k-means ratio sweep");
  kmeans->add_option("--clusters", cfg.rank_or_k, "cluster count k");
  kmeans->add_option("--coreset", cfg.coreset_size, "global coreset sample budget");
  add_common_flags(kmeans, cfg, format, backend, dims);

  auto* pcr = app.add_subcommand("pcr", "principal component regression ratio sweep");
  pcr->add_option("--rank", cfg.rank_or_k, "synthetic target subspace rank");
  pcr->add_option("--ridge", cfg.ridge, "ridge regularizer");
  pcr->add_option("--target-col", cfg.target_column,
                  "0-based target column (-1: last column)");
  add_common_flags(pcr, cfg, format, backend, dims);

  auto* verify = app.add_subcommand("verify", "run the protocol property suites");
  std::uint64_t verify_seed = 0;
  verify->add_option("--seed", verify_seed, "random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) {
      const bool ok = dispca::apps::run_verify(verify_seed, std::cout);
      std::cout << (ok ? "verify: all checks passed\n" : "verify: FAILURES\n");
      return ok ? 0 : 1;
    }
    finish_config(cfg, format, backend, dims);
    RunOutput out;
    if (lowrank->parsed()) {
      cfg.task = Task::Lowrank;
      out = dispca::apps::run_lowrank(cfg);
    } else if (kmeans->parsed()) {
      cfg.task = Task::Kmeans;
      out = dispca::apps::run_kmeans(cfg);
    } else {
      cfg.task = Task::Pcr;
      out = dispca::apps::run_pcr(cfg);
    }
    dispca::apps::emit_results(out, cfg.output_path);
    print_rows(out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
