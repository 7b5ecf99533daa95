#include "dispca/apps.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "dispca/clustering.hpp"
#include "dispca/errors.hpp"
#include "dispca/linalg.hpp"
#include "dispca/protocol.hpp"
#include "dispca/rng.hpp"
#include "dispca/rsvd.hpp"
#include "dispca/sketching.hpp"

namespace dispca::apps {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_real(const std::string& tok, const std::string& path, long line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError(path, line, "bad number '" + tok + "'");
  }
}

LoadedDataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::vector<std::vector<double>> rows;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(t);
    std::string tok;
    while (std::getline(ss, tok, ',')) row.push_back(parse_real(trim(tok), path, lineno));
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(path, lineno, "ragged row: expected " +
                                         std::to_string(rows.front().size()) +
                                         " columns, got " + std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path, lineno, "no data rows");
  LoadedDataset out;
  out.features.resize(static_cast<Index>(rows.size()),
                      static_cast<Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      out.features(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return out;
}

LoadedDataset load_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::string line;
  long lineno = 0;
  if (!std::getline(in, line)) throw ParseError(path, 1, "missing header");
  ++lineno;
  if (line.rfind("%%MatrixMarket", 0) != 0)
    throw ParseError(path, lineno, "not a MatrixMarket file");
  {
    std::stringstream ss(line);
    std::string banner, object, fmt, field;
    ss >> banner >> object >> fmt >> field;
    if (object != "matrix" || fmt != "coordinate" || (field != "real" && field != "integer"))
      throw ParseError(path, lineno, "only 'matrix coordinate real' is supported");
  }
  Index rows = 0, cols = 0;
  long entries = -1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '%') continue;
    std::stringstream ss(t);
    if (!(ss >> rows >> cols >> entries))
      throw ParseError(path, lineno, "bad size line");
    break;
  }
  if (entries < 0) throw ParseError(path, lineno, "missing size line");
  LoadedDataset out;
  out.features = Matrix::Zero(rows, cols);
  long seen = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '%') continue;
    std::stringstream ss(t);
    Index i = 0, j = 0;
    std::string vtok;
    if (!(ss >> i >> j >> vtok)) throw ParseError(path, lineno, "bad entry line");
    if (i < 1 || i > rows || j < 1 || j > cols)
      throw ParseError(path, lineno, "entry index out of bounds");
    out.features(i - 1, j - 1) = parse_real(vtok, path, lineno);
    ++seen;
  }
  if (seen != entries)
    throw ParseError(path, lineno, "expected " + std::to_string(entries) +
                                       " entries, found " + std::to_string(seen));
  return out;
}

LoadedDataset load_libsvm(const std::string& path, Index dim_hint) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, 0, "cannot open file");
  std::vector<double> labels;
  std::vector<std::vector<std::pair<Index, double>>> rows;
  Index max_index = 0;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::stringstream ss(t);
    std::string tok;
    if (!(ss >> tok)) continue;
    labels.push_back(parse_real(tok, path, lineno));
    std::vector<std::pair<Index, double>> entries;
    while (ss >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos)
        throw ParseError(path, lineno, "expected index:value, got '" + tok + "'");
      const Index idx =
          static_cast<Index>(parse_real(tok.substr(0, colon), path, lineno));
      if (idx < 1) throw ParseError(path, lineno, "libsvm indices are 1-based");
      entries.emplace_back(idx, parse_real(tok.substr(colon + 1), path, lineno));
      max_index = std::max(max_index, idx);
    }
    rows.push_back(std::move(entries));
  }
  if (rows.empty()) throw ParseError(path, lineno, "no data rows");
  const Index d = dim_hint > 0 ? dim_hint : max_index;
  if (max_index > d)
    throw ParseError(path, 0, "feature index exceeds requested dimension");
  LoadedDataset out;
  out.features = Matrix::Zero(static_cast<Index>(rows.size()), d);
  out.targets.resize(static_cast<Index>(labels.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.targets(static_cast<Index>(i)) = labels[i];
    for (const auto& [idx, v] : rows[i]) out.features(static_cast<Index>(i), idx - 1) = v;
  }
  return out;
}

int derived_q(const ExperimentConfig& cfg, Index d) {
  if (cfg.rsvd_q > 0) return cfg.rsvd_q;
  return rsvd::default_power_iterations(d, cfg.s, cfg.rank_or_k, cfg.eps);
}

protocol::DisPcaParams pca_params(const ExperimentConfig& cfg, Index t, Index d,
                                  std::uint64_t seed) {
  protocol::DisPcaParams p;
  p.t1 = t;
  p.t2 = t;
  p.seed = seed;
  if (cfg.backend == Backend::Fast) {
    p.backend = protocol::SvdBackend::Randomized;
    p.rsvd_q = derived_q(cfg, d);
    protocol::SketchConfig sk;
    sk.eps = cfg.eps;
    sk.ell = cfg.sketch_ell;
    sk.boost = cfg.boost;
    p.sketch = sk;
  }
  return p;
}

Matrix task_data(const ExperimentConfig& cfg, Vector* targets) {
  if (!cfg.dataset_path.empty()) {
    LoadedDataset ds = load_dataset(cfg.dataset_path, cfg.format);
    if (targets) {
      if (ds.targets.size() > 0) {
        *targets = ds.targets;
      } else {
        Index col = cfg.target_column >= 0 ? cfg.target_column : ds.features.cols() - 1;
        if (col < 0 || col >= ds.features.cols())
          throw std::invalid_argument("pcr: target column out of range");
        *targets = ds.features.col(col);
        Matrix rest(ds.features.rows(), ds.features.cols() - 1);
        Index at = 0;
        for (Index j = 0; j < ds.features.cols(); ++j)
          if (j != col) rest.col(at++) = ds.features.col(j);
        ds.features = std::move(rest);
      }
    }
    return ds.features;
  }
  switch (cfg.task) {
    case Task::Kmeans:
      return gaussian_mixture(cfg.synth_rows, cfg.synth_cols, cfg.rank_or_k,
                              8.0, 1.0, mix_seed(cfg.seed, 0xDA7A));
    case Task::Pcr: {
      auto [x, y] = pcr_synthetic(cfg.synth_rows, cfg.synth_cols,
                                  std::min<Index>(cfg.rank_or_k, cfg.synth_cols),
                                  0.05, mix_seed(cfg.seed, 0xDA7A));
      if (targets) *targets = y;
      return x;
    }
    case Task::Lowrank:
    default:
      return spectrum_matrix(cfg.synth_rows, cfg.synth_cols, 1.0,
                             mix_seed(cfg.seed, 0xDA7A));
  }
}

void validate(const ExperimentConfig& cfg, Index d) {
  if (cfg.projection_dims.empty())
    throw std::invalid_argument("config: projection_dims must be non-empty");
  for (Index t : cfg.projection_dims)
    if (t < 1 || t > d)
      throw std::invalid_argument("config: projection dim out of [1, d]");
  if (cfg.repetitions < 1)
    throw std::invalid_argument("config: repetitions must be >= 1");
}

}  // namespace

LoadedDataset load_dataset(const std::string& path, DataFormat format,
                           Index dim_hint) {
  switch (format) {
    case DataFormat::CsvDense: return load_csv(path);
    case DataFormat::MatrixMarket: return load_matrix_market(path);
    case DataFormat::Libsvm: return load_libsvm(path, dim_hint);
  }
  throw std::invalid_argument("load_dataset: unknown format");
}

Matrix spectrum_matrix(Index n, Index d, double decay, std::uint64_t seed) {
  const Index m = std::min(n, d);
  const Matrix u = linalg::qr_factorize(sketching::gaussian_matrix(n, m, mix_seed(seed, 1))).q;
  const Matrix v = linalg::qr_factorize(sketching::gaussian_matrix(d, m, mix_seed(seed, 2))).q;
  Vector sigma(m);
  for (Index i = 0; i < m; ++i) sigma(i) = std::pow(static_cast<double>(i + 1), -decay);
  return u * sigma.asDiagonal() * v.transpose();
}

Matrix gaussian_mixture(Index n, Index d, Index k, double separation, double noise,
                        std::uint64_t seed, Index means_rank) {
  Matrix means(k, d);
  if (means_rank > 0 && means_rank < d) {
    const Matrix basis =
        linalg::qr_factorize(sketching::gaussian_matrix(d, means_rank, mix_seed(seed, 1))).q;
    means = sketching::gaussian_matrix(k, means_rank, mix_seed(seed, 2)) *
            separation * basis.transpose();
  } else {
    means = sketching::gaussian_matrix(k, d, mix_seed(seed, 2)) * separation /
            std::sqrt(static_cast<double>(d));
  }
  Matrix out(n, d);
  auto rng = make_rng(mix_seed(seed, 3));
  std::uniform_int_distribution<Index> comp(0, k - 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    const Index c = comp(rng);
    for (Index j = 0; j < d; ++j) out(i, j) = means(c, j) + noise * normal(rng);
  }
  return out;
}

Matrix lowrank_plus_noise(Index n, Index d, Index rank, double noise,
                          std::uint64_t seed) {
  const Matrix a = sketching::gaussian_matrix(n, rank, mix_seed(seed, 1));
  const Matrix b = sketching::gaussian_matrix(d, rank, mix_seed(seed, 2));
  Matrix out = a * b.transpose() / std::sqrt(static_cast<double>(rank));
  if (noise > 0.0)
    out += noise * sketching::gaussian_matrix(n, d, mix_seed(seed, 3));
  return out;
}

Matrix sparse_random(Index n, Index d, double density, std::uint64_t seed) {
  Matrix out = Matrix::Zero(n, d);
  auto rng = make_rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j)
      if (uniform(rng) < density) out(i, j) = normal(rng);
  return out;
}

std::pair<Matrix, Vector> pcr_synthetic(Index n, Index d, Index rank, double noise,
                                        std::uint64_t seed) {
  Matrix x = lowrank_plus_noise(n, d, rank, 0.02, mix_seed(seed, 1));
  x = linalg::center(x);
  const linalg::SvdFactors f = linalg::svd(x);
  const Matrix coords = x * f.v.leftCols(rank);
  auto rng = make_rng(mix_seed(seed, 2));
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector beta(rank);
  for (Index i = 0; i < rank; ++i) beta(i) = normal(rng);
  Vector y = coords * beta;
  for (Index i = 0; i < n; ++i) y(i) += noise * normal(rng);
  return {std::move(x), std::move(y)};
}

RunOutput run_lowrank(const ExperimentConfig& cfg) {
  const Matrix p = linalg::center(task_data(cfg, nullptr));
  validate(cfg, p.cols());
  const Index r = std::min<Index>(cfg.rank_or_k, std::min(p.rows(), p.cols()));
  const linalg::SvdFactors global = linalg::svd(p);
  const linalg::Subspace top_r{global.v.leftCols(r)};
  const double baseline = linalg::dist_sq(p, top_r);

  RunOutput out;
  out.task = "lowrank";
  out.baseline = baseline;
  const auto start = Clock::now();
  for (std::size_t di = 0; di < cfg.projection_dims.size(); ++di) {
    if (elapsed_ms(start) > cfg.timeout_seconds * 1000.0) break;
    const Index t = cfg.projection_dims[di];
    const auto t_start = Clock::now();
    double ratio_sum = 0.0;
    std::int64_t words = 0;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      const std::uint64_t rep_seed = mix_seed(cfg.seed, 100 * di + rep);
      const auto data = protocol::partition_powerlaw(p, cfg.s, cfg.alpha, rep_seed);
      const auto result =
          protocol::dispca(data, pca_params(cfg, t, p.cols(), rep_seed));
      const Index rr = std::min(r, result.subspace.dim());
      const linalg::Subspace solution{result.subspace.basis.leftCols(rr)};
      const double cost = linalg::dist_sq(p, solution);
      ratio_sum += baseline > 0.0 ? cost / baseline : 1.0;
      words = result.transcript.total_words;
    }
    ResultRow row;
    row.projection_dim = t;
    row.ratio = ratio_sum / cfg.repetitions;
    row.wall_time_ms = cfg.zero_timing ? 0.0 : elapsed_ms(t_start);
    row.comm_words = words;
    row.seed = mix_seed(cfg.seed, 100 * di);
    out.rows.push_back(row);
  }
  return out;
}

RunOutput run_kmeans(const ExperimentConfig& cfg) {
  const Matrix p = linalg::center(task_data(cfg, nullptr));
  validate(cfg, p.cols());
  const Index k = cfg.rank_or_k;

  double baseline = std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < cfg.repetitions; ++rep) {
    const auto sol = clustering::lloyd(p, k, clustering::KmeansInit::KmeansPlusPlus,
                                       100, mix_seed(cfg.seed, 0xBA5E + rep));
    baseline = std::min(baseline, sol.cost);
  }
  // Costs at round-off scale count as zero so degenerate instances
  // report ratio 1 instead of a 0/0 artifact.
  const double cost_floor = 1e-12 * p.squaredNorm();

  RunOutput out;
  out.task = "kmeans";
  out.baseline = baseline;
  const auto start = Clock::now();
  for (std::size_t di = 0; di < cfg.projection_dims.size(); ++di) {
    if (elapsed_ms(start) > cfg.timeout_seconds * 1000.0) break;
    const Index t = cfg.projection_dims[di];
    const auto t_start = Clock::now();
    double ratio_sum = 0.0;
    std::int64_t words = 0;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      const std::uint64_t rep_seed = mix_seed(cfg.seed, 100 * di + rep);
      const auto data = protocol::partition_powerlaw(p, cfg.s, cfg.alpha, rep_seed);
      clustering::KmeansOptions opts;
      opts.projection_dim = t;
      if (cfg.backend == Backend::Fast) {
        opts.backend = protocol::SvdBackend::Randomized;
        opts.rsvd_q = derived_q(cfg, p.cols());
        protocol::SketchConfig sk;
        sk.eps = std::min(cfg.eps, 0.33);
        sk.ell = cfg.sketch_ell;
        sk.boost = cfg.boost;
        opts.sketch = sk;
      }
      const auto result = clustering::distributed_kmeans(
          data, k, std::min(cfg.eps, 0.33), cfg.coreset_size, rep_seed, opts);
      if (baseline > cost_floor) {
        ratio_sum += result.solution.cost / baseline;
      } else {
        ratio_sum += result.solution.cost <= cost_floor ? 1.0 : 2.0;
      }
      words = result.transcript.total_words;
    }
    ResultRow row;
    row.projection_dim = t;
    row.ratio = ratio_sum / cfg.repetitions;
    row.wall_time_ms = cfg.zero_timing ? 0.0 : elapsed_ms(t_start);
    row.comm_words = words;
    row.seed = mix_seed(cfg.seed, 100 * di);
    out.rows.push_back(row);
  }
  return out;
}

RunOutput run_pcr(const ExperimentConfig& cfg) {
  Vector targets;
  Matrix p = task_data(cfg, &targets);
  if (targets.size() != p.rows())
    throw std::invalid_argument("pcr: dataset carries no usable target column");
  p = linalg::center(p);
  targets.array() -= targets.mean();
  validate(cfg, p.cols());

  const linalg::SvdFactors global = linalg::svd(p);
  const linalg::Subspace full{global.v};
  const double baseline = clustering::pcr(p, targets, full, cfg.ridge).fit_error;

  RunOutput out;
  out.task = "pcr";
  out.baseline = baseline;
  const auto start = Clock::now();
  for (std::size_t di = 0; di < cfg.projection_dims.size(); ++di) {
    if (elapsed_ms(start) > cfg.timeout_seconds * 1000.0) break;
    const Index t = cfg.projection_dims[di];
    const auto t_start = Clock::now();
    const linalg::Subspace exact_t{global.v.leftCols(std::min(t, global.count()))};
    const double exact_err = clustering::pcr(p, targets, exact_t, cfg.ridge).fit_error;
    double ratio_sum = 0.0;
    std::int64_t words = 0;
    for (int rep = 0; rep < cfg.repetitions; ++rep) {
      const std::uint64_t rep_seed = mix_seed(cfg.seed, 100 * di + rep);
      const auto data = protocol::partition_powerlaw(p, cfg.s, cfg.alpha, rep_seed);
      // Untruncated local summaries: with t1 = d the stacked Gram matrix
      // Y^T Y equals P^T P, so the exact backend reproduces the global
      // top-t subspace and the ratio is exactly 1.
      protocol::DisPcaParams params = pca_params(cfg, t, p.cols(), rep_seed);
      params.t1 = p.cols();
      const auto result = protocol::dispca(data, params);
      const double dist_err =
          clustering::pcr(p, targets, result.subspace, cfg.ridge).fit_error;
      if (exact_err > 1e-12) {
        ratio_sum += dist_err / exact_err;
      } else {
        ratio_sum += dist_err <= 1e-8 ? 1.0 : 2.0;
      }
      words = result.transcript.total_words;
    }
    ResultRow row;
    row.projection_dim = t;
    row.ratio = ratio_sum / cfg.repetitions;
    row.wall_time_ms = cfg.zero_timing ? 0.0 : elapsed_ms(t_start);
    row.comm_words = words;
    row.seed = mix_seed(cfg.seed, 100 * di);
    out.rows.push_back(row);
  }
  return out;
}

void emit_results(const RunOutput& out, const std::string& base_path) {
  if (out.rows.empty())
    throw std::invalid_argument("emit_results: no rows to write");
  std::string base = base_path;
  if (base.size() > 5 && base.substr(base.size() - 5) == ".json")
    base = base.substr(0, base.size() - 5);

  nlohmann::json j;
  j["task"] = out.task;
  j["baseline"] = out.baseline;
  j["rows"] = nlohmann::json::array();
  for (const ResultRow& r : out.rows)
    j["rows"].push_back({{"projection_dim", r.projection_dim},
                         {"ratio", r.ratio},
                         {"wall_time_ms", r.wall_time_ms},
                         {"comm_words", r.comm_words},
                         {"seed", r.seed}});
  {
    std::ofstream f(base + ".json");
    if (!f) throw std::runtime_error("emit_results: cannot write " + base + ".json");
    f << j.dump(2) << '\n';
  }
  {
    std::ofstream f(base + ".csv");
    if (!f) throw std::runtime_error("emit_results: cannot write " + base + ".csv");
    f << "projection_dim,ratio,wall_time_ms,comm_words\n";
    std::ostringstream body;
    body.precision(17);
    for (const ResultRow& r : out.rows)
      body << r.projection_dim << ',' << r.ratio << ',' << r.wall_time_ms << ','
           << r.comm_words << '\n';
    f << body.str();
  }
}

RunOutput parse_results(const std::string& json_path) {
  std::ifstream f(json_path);
  if (!f) throw std::runtime_error("parse_results: cannot open " + json_path);
  nlohmann::json j;
  f >> j;
  RunOutput out;
  out.task = j.value("task", "");
  out.baseline = j.value("baseline", 0.0);
  for (const auto& rj : j.at("rows")) {
    ResultRow r;
    r.projection_dim = rj.at("projection_dim").get<Index>();
    r.ratio = rj.at("ratio").get<double>();
    r.wall_time_ms = rj.at("wall_time_ms").get<double>();
    r.comm_words = rj.at("comm_words").get<std::int64_t>();
    r.seed = rj.at("seed").get<std::uint64_t>();
    out.rows.push_back(r);
  }
  return out;
}

bool run_verify(std::uint64_t seed, std::ostream& log) {
  bool all = true;
  auto report = [&](const std::string& name, bool pass, const std::string& detail) {
    log << (pass ? "PASS" : "FAIL") << "  " << name << "  (" << detail << ")\n";
    all = all && pass;
  };

  // Shared synthetic instance.
  const Matrix p = linalg::center(spectrum_matrix(400, 30, 1.0, mix_seed(seed, 1)));
  const Index d = p.cols();

  {  // Approximation ratio of the two-stage protocol at its stated threshold.
    const Index r = 3;
    const double eps = 0.5;
    const Index t1 = r + static_cast<Index>(std::ceil(4.0 * r / eps)) - 1;
    const double best = linalg::dist_sq(p, linalg::Subspace{linalg::svd(p).v.leftCols(r)});
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      const auto data =
          protocol::partition_powerlaw(p, 4, 2.0, mix_seed(seed, 10 + trial));
      protocol::DisPcaParams params;
      params.t1 = std::min(t1, d);
      params.t2 = r;
      params.seed = mix_seed(seed, 20 + trial);
      const auto result = protocol::dispca(data, params);
      worst = std::max(worst, linalg::dist_sq(p, result.subspace) / best);
    }
    std::ostringstream os;
    os << "worst ratio " << worst << " <= " << 1.0 + eps;
    report("approximation ratio, exact backend", worst <= 1.0 + eps, os.str());
  }

  {  // Close projection at t1 = t2 = k + ceil(8k/eps) - 1.
    const Index k = 2;
    const double eps = 0.5;
    const Index t = k + static_cast<Index>(std::ceil(8.0 * k / eps)) - 1;
    const auto data = protocol::partition_powerlaw(p, 4, 2.0, mix_seed(seed, 30));
    protocol::DisPcaParams params;
    params.t1 = std::min(t, d);
    params.t2 = params.t1;
    params.seed = mix_seed(seed, 31);
    const auto result = protocol::dispca(data, params);
    const Matrix p_tilde = linalg::project(p, result.subspace);
    int failures = 0;
    for (int trial = 0; trial < 20; ++trial) {
      const linalg::Subspace x{
          linalg::qr_factorize(sketching::gaussian_matrix(d, k, mix_seed(seed, 40 + trial))).q};
      if (!protocol::verify_close_projection(p, p_tilde, x, eps).strict_pass) ++failures;
    }
    report("close projection (strict bounds)", failures == 0,
           std::to_string(failures) + " of 20 subspaces failed");
  }

  {  // Cost sandwich at t1 = t2 = k + ceil(4k/eps^2) - 1.
    const Index k = 2;
    const double eps = 0.6;
    const Index t =
        std::min<Index>(k + static_cast<Index>(std::ceil(4.0 * k / (eps * eps))) - 1, d);
    const auto data = protocol::partition_powerlaw(p, 4, 2.0, mix_seed(seed, 50));
    protocol::DisPcaParams params;
    params.t1 = t;
    params.t2 = t;
    params.seed = mix_seed(seed, 51);
    const auto result = protocol::dispca(data, params);
    const Matrix p_tilde = linalg::project(p, result.subspace);
    const double c0 = p.squaredNorm() - p_tilde.squaredNorm();
    auto rng = make_rng(mix_seed(seed, 52));
    std::normal_distribution<double> normal(0.0, 1.0);
    int failures = 0;
    for (int trial = 0; trial < 20; ++trial) {
      Matrix centers(k, d);
      for (Index i = 0; i < centers.size(); ++i) centers.data()[i] = 0.05 * normal(rng);
      const double cost_p = clustering::kmeans_cost(p, centers);
      const double cost_pt = clustering::kmeans_cost(p_tilde, centers) + c0;
      if (!(cost_pt >= (1 - eps) * cost_p - 1e-9 && cost_pt <= (1 + eps) * cost_p + 1e-9))
        ++failures;
    }
    report("cost sandwich (projected proxy)", failures == 0 && c0 >= -1e-10,
           std::to_string(failures) + " of 20 center sets failed, c0 = " +
               std::to_string(c0));
  }

  {  // Relaxed sandwich for the sketched + randomized pipeline.
    const Matrix q = linalg::center(
        gaussian_mixture(800, 20, 3, 6.0, 1.0, mix_seed(seed, 60)));
    const Index k = 3;
    const double eps = 0.4;
    const auto data = protocol::partition_powerlaw(q, 4, 2.0, mix_seed(seed, 61));
    protocol::DisPcaParams params;
    params.t1 = 8;
    params.t2 = 8;
    params.backend = protocol::SvdBackend::Randomized;
    params.rsvd_q = rsvd::default_power_iterations(q.cols(), 4, k, eps);
    protocol::SketchConfig sk;
    sk.eps = eps;
    sk.ell = static_cast<Index>(std::ceil(q.cols() * q.cols() / (eps * eps)));
    params.sketch = sk;
    params.seed = mix_seed(seed, 62);
    const auto result = protocol::dispca(data, params);
    const Matrix concat = data.concatenated();
    const Matrix p_tilde = linalg::project(concat, result.subspace);
    const double c0 = concat.squaredNorm() - p_tilde.squaredNorm();
    auto rng = make_rng(mix_seed(seed, 63));
    std::normal_distribution<double> normal(0.0, 1.0);
    int failures = 0;
    for (int trial = 0; trial < 20; ++trial) {
      Matrix centers(k, q.cols());
      for (Index i = 0; i < centers.size(); ++i) centers.data()[i] = normal(rng);
      const linalg::Subspace x{linalg::qr_factorize(centers.transpose()).q};
      const double slack = eps * (concat * x.basis).squaredNorm();
      const double cost_p = clustering::kmeans_cost(concat, centers);
      const double cost_pt = clustering::kmeans_cost(p_tilde, centers) + c0;
      if (!(cost_pt >= (1 - eps) * cost_p - slack - 1e-9 &&
            cost_pt <= (1 + eps) * cost_p + slack + 1e-9))
        ++failures;
    }
    report("relaxed sandwich (sketched pipeline)", failures == 0,
           std::to_string(failures) + " of 20 center sets failed");
  }

  return all;
}

}  // namespace dispca::apps
