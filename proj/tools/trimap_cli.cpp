// trimap: embed a dataset with triplet constraints and report (NN, GS) quality metrics.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "trimap/trimap.hpp"

namespace {

// Every failure ends up as one line on stderr: "error: <stage>: <reason>".
int fail(const std::string& reason) {
  std::string line = reason;
  for (char& c : line) {
    if (c == '\n' || c == '\r') c = ' ';
  }
  std::cerr << "error: " << line << '\n';
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Triplet-based dimensionality reduction with global score evaluation"};
  app.set_version_flag("--version", "trimap 1.0.0");

  trimap::RunConfig config;
  std::string input;
  std::string format = "csv";
  std::string labels_path;
  std::string out_path;
  std::string plot_path;
  std::string metrics_path;
  trimap::Index n_points = 5000;
  int threads = 0;
  int plot_width = 800;
  int plot_height = 800;
  bool quiet = false;

  app.add_option("--input", input, "Input data file (csv or raw-f32)");
  app.add_option("--format", format, "Input format")->check(CLI::IsMember({"csv", "raw-f32", "scurve"}))->capture_default_str();
  app.add_option("--n-points", n_points, "Points generated for --format scurve")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--labels", labels_path, "Integer class labels, one per line");
  app.add_option("--out", out_path, "Write the embedding as CSV");
  app.add_option("--plot", plot_path, "Write an SVG scatter plot (2-D embeddings only)");
  app.add_option("--plot-width", plot_width, "SVG width")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--plot-height", plot_height, "SVG height")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--metrics", metrics_path, "Write key=value metrics");
  app.add_option("--dims", config.out_dims, "Embedding dimensionality")->capture_default_str();
  app.add_option("--n-neighbors", config.m_neighbors, "Nearest neighbors per point (m)")->capture_default_str();
  app.add_option("--nn-triplets", config.m_prime, "Triplets per nearest neighbor (m')")->capture_default_str();
  app.add_option("--random-triplets", config.r_random, "Random triplets per point (r)")->capture_default_str();
  app.add_option("--gamma", config.gamma, "Weight transform scale")->capture_default_str();
  app.add_option("--delta", config.delta, "Weight transform offset")->capture_default_str();
  app.add_option("--iters", config.iters, "Gradient descent iterations")->capture_default_str();
  app.add_option("--seed", config.seed, "Random seed")->capture_default_str();
  app.add_option("--pre-reduce", config.pre_reduce_dims, "PCA pre-reduction target dimensionality")->capture_default_str();
  app.add_option("--init-scale", config.init_scale, "Scale applied to the PCA initialization")->capture_default_str();
  app.add_option("--learning-rate", config.learning_rate, "Base learning rate before the n/|T| factor")->capture_default_str();
  app.add_option("--knn-trees", config.knn_trees, "Random projection trees")->capture_default_str();
  app.add_option("--knn-leaf-size", config.knn_leaf_size, "Maximum points per tree leaf")->capture_default_str();
  app.add_flag("--exact-knn", config.exact_knn, "Exact neighbor search instead of the forest (n <= 20000)");
  app.add_option("--threads", threads, "Worker threads (0: TRIMAP_NUM_THREADS or all cores)")->capture_default_str();
  app.add_flag("--quiet", quiet, "Suppress per-stage log lines");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(std::string("cli: ") + e.what());
  }

  trimap::set_num_threads(threads);

  try {
    std::optional<trimap::LabeledData> data;
    trimap::LabelVector labels;
    bool have_labels = false;
    try {
      if (format == "scurve") {
        auto generated = trimap::make_s_curve(n_points, config.seed);
        labels = std::move(generated.labels);
        have_labels = true;
        data.emplace(std::move(generated));
      } else {
        if (input.empty()) return fail("input: --input is required for format " + format);
        data.emplace(trimap::LabeledData{trimap::load_matrix(input, trimap::parse_matrix_format(format)), {}});
      }
      if (!labels_path.empty()) {
        labels = trimap::load_labels(labels_path);
        have_labels = true;
      }
    } catch (const std::exception& e) {
      return fail(std::string("input: ") + e.what());
    }
    if (config.exact_knn && data->data.n() > 20000) return fail("config: --exact-knn is limited to n <= 20000");
    if (!plot_path.empty() && config.out_dims != 2) return fail("config: --plot needs --dims 2");

    trimap::LogSink log;
    if (!quiet) log = [](std::string_view line) { std::cerr << "[trimap] " << line << '\n'; };
    const trimap::LabelVector* label_ptr = have_labels ? &labels : nullptr;
    const trimap::PipelineResult result = trimap::run_pipeline(config, data->data, label_ptr, log);

    try {
      if (!out_path.empty()) trimap::write_embedding(result.embedding, label_ptr, out_path);
      if (!plot_path.empty()) trimap::render_scatter(result.embedding, label_ptr, plot_path, plot_width, plot_height);
      if (!metrics_path.empty()) trimap::write_metrics(result, metrics_path);
    } catch (const std::exception& e) {
      return fail(std::string("output: ") + e.what());
    }

    std::cout << "n=" << result.n << " triplets=" << result.triplet_count << " gs=" << result.metrics.global_score;
    if (result.metrics.nn_accuracy) std::cout << " nn=" << *result.metrics.nn_accuracy;
    std::cout << " total_ms=" << static_cast<long long>(result.timings.total_ms) << '\n';
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return EXIT_SUCCESS;
}
