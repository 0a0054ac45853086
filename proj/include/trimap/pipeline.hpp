#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include "trimap/config.hpp"
#include "trimap/data_io.hpp"
#include "trimap/knn.hpp"
#include "trimap/linalg.hpp"
#include "trimap/metrics.hpp"
#include "trimap/optimizer.hpp"
#include "trimap/triplets.hpp"
#include "trimap/types.hpp"

namespace trimap {

// An error raised inside one pipeline stage, prefixed with the stage name.
class StageError : public Error {
 public:
  StageError(std::string stage, const std::string& what) : Error(stage + ": " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct StageTimings {
  double pre_reduce_ms = 0.0;
  double knn_ms = 0.0;
  double triplets_ms = 0.0;
  double init_ms = 0.0;
  double optimize_ms = 0.0;
  double metrics_ms = 0.0;
  double total_ms = 0.0;

  double stage_sum() const { return pre_reduce_ms + knn_ms + triplets_ms + init_ms + optimize_ms + metrics_ms; }
};

struct PipelineResult {
  Embedding embedding;
  MetricsReport metrics;
  StageTimings timings;
  RunConfig config_echo;
  Index n = 0;
  Index triplet_count = 0;
  LossReport loss;
};

using LogSink = std::function<void(std::string_view)>;

namespace detail {

using Clock = std::chrono::steady_clock;

inline double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

template <typename Fn>
auto run_stage(const char* stage, double& timing, const LogSink& log, Fn&& fn) {
  const auto start = Clock::now();
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      timing = elapsed_ms(start);
      if (log) log(std::string(stage) + " done in " + std::to_string(static_cast<long long>(timing)) + " ms");
    } else {
      auto value = fn();
      timing = elapsed_ms(start);
      if (log) log(std::string(stage) + " done in " + std::to_string(static_cast<long long>(timing)) + " ms");
      return value;
    }
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace detail

// pre_reduce -> k-NN -> sigmas -> triplet sampling -> weighting -> scaled PCA init ->
// optimize -> metrics. Deterministic for a fixed config (including seed).
inline PipelineResult run_pipeline(const RunConfig& config, const DataMatrix& input, const LabelVector* labels = nullptr,
                                   const LogSink& log = {}) {
  const auto start = detail::Clock::now();
  try {
    config.validate();
  } catch (const std::exception& e) {
    throw StageError("config", e.what());
  }
  const Index n = input.n();
  if (n <= config.m_neighbors + 1) {
    throw StageError("config", "n too small for m_neighbors (n = " + std::to_string(n) +
                                   ", m_neighbors = " + std::to_string(config.m_neighbors) + ")");
  }
  if (n <= config.knn_k()) {
    throw StageError("config", "n too small for the neighbor search (n = " + std::to_string(n) + ", need more than " +
                                   std::to_string(config.knn_k()) + ")");
  }
  if (labels != nullptr && static_cast<Index>(labels->size()) != n) {
    throw StageError("input", "label count " + std::to_string(labels->size()) + " does not match " + std::to_string(n) + " points");
  }

  PipelineResult result;
  result.config_echo = config;
  result.n = n;
  StageTimings& timings = result.timings;

  const DataMatrix x = detail::run_stage("pre_reduce", timings.pre_reduce_ms, log,
                                         [&] { return pre_reduce(input, config.pre_reduce_dims); });
  if (config.out_dims >= x.m()) {
    throw StageError("config", "out_dims = " + std::to_string(config.out_dims) + " must be below the input dimensionality " +
                                   std::to_string(x.m()));
  }

  const NeighborTable neighbors = detail::run_stage("knn", timings.knn_ms, log, [&] {
    if (config.exact_knn) return exact_knn(x, config.knn_k());
    const RPForest forest = build_forest(x, config.knn_trees, config.knn_leaf_size, config.seed);
    return query_all_knn(forest, x, config.knn_k(), config.knn_search_factor);
  });

  const TripletSet triplets = detail::run_stage("triplets", timings.triplets_ms, log, [&] {
    const SigmaVector sigmas = compute_sigmas(neighbors);
    TripletSet set = sample_triplets(x, neighbors, sigmas, config, config.seed);
    weight_triplets(set, config.gamma, config.delta);
    return set;
  });
  result.triplet_count = triplets.size();

  const PcaFit pca = detail::run_stage("init", timings.init_ms, log, [&] { return fit_pca(x, config.out_dims, config.seed); });

  OptimizeResult optimized = detail::run_stage("optimize", timings.optimize_ms, log, [&] {
    const Embedding init(pca.embedding.values() * config.init_scale);
    return optimize(triplets, init, config);
  });
  result.loss = std::move(optimized.loss);
  result.embedding = std::move(optimized.embedding);

  result.metrics = detail::run_stage("metrics", timings.metrics_ms, log, [&] {
    MetricsReport report;
    const GlobalScore gs = global_score_from(x, result.embedding, mre(x, pca.embedding));
    report.mre = gs.mre;
    report.mre_pca = gs.mre_pca;
    report.global_score = gs.score;
    report.degenerate_pca = gs.degenerate;
    if (gs.degenerate && log) log("warning: data has rank <= d; global score is 0/1 only");
    if (labels != nullptr) {
      const NnAccuracy acc = nn_accuracy(result.embedding, *labels, config.seed);
      report.nn_accuracy = acc.value;
      report.nn_points = acc.points;
    }
    return report;
  });
  timings.total_ms = detail::elapsed_ms(start);
  return result;
}

// key=value lines: mre, mre_pca, global_score, nn_accuracy (when labels were given), n, d,
// seed, then the timings. Reals use the shortest round-trippable form.
inline std::string format_metrics(const PipelineResult& result) {
  std::string out;
  auto real = [&](std::string_view key, double v) {
    out += key;
    out += '=';
    detail::append_shortest(out, v);
    out += '\n';
  };
  auto integer = [&](std::string_view key, auto v) {
    out += key;
    out += '=';
    out += std::to_string(v);
    out += '\n';
  };
  real("mre", result.metrics.mre);
  real("mre_pca", result.metrics.mre_pca);
  real("global_score", result.metrics.global_score);
  if (result.metrics.nn_accuracy) real("nn_accuracy", *result.metrics.nn_accuracy);
  integer("n", result.n);
  integer("d", result.embedding.d());
  integer("seed", result.config_echo.seed);
  real("time_total_ms", result.timings.total_ms);
  real("time_knn_ms", result.timings.knn_ms);
  real("time_triplets_ms", result.timings.triplets_ms);
  real("time_opt_ms", result.timings.optimize_ms);
  return out;
}

inline void write_metrics(const PipelineResult& result, const std::filesystem::path& path) {
  detail::write_file(path, format_metrics(result));
}

}  // namespace trimap
