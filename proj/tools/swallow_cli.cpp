// Command-line front end: synth, extract, stats, reduce, train, predict,
// evaluate, report.
//
// Exit codes: 0 ok, 2 I/O, 3 format, 4 data/precondition, 5 internal, 64 usage.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "swallow/swallow.hpp"

namespace fs = std::filesystem;
using namespace swallow;

namespace {

constexpr int kExitIo = 2;
constexpr int kExitFormat = 3;
constexpr int kExitData = 4;
constexpr int kExitInternal = 5;
constexpr int kExitUsage = 64;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::io: return kExitIo;
    case Errc::format:
    case Errc::unsupported_layout:
    case Errc::unsupported_codec:
    case Errc::vocabulary:
    case Errc::range: return kExitFormat;
    default: return kExitData;
  }
}

/// Files written by the current command; removed again unless commit() runs.
class Outputs {
 public:
  Outputs() = default;
  Outputs(const Outputs&) = delete;
  Outputs& operator=(const Outputs&) = delete;
  ~Outputs() {
    if (committed_) return;
    std::error_code ec;
    for (auto it = written_.rbegin(); it != written_.rend(); ++it) fs::remove(*it, ec);
  }

  void write(const std::string& path, const std::string& content) {
    track(path);
    csv::write_file(path, content);
  }
  void track(const std::string& path) { written_.push_back(path); }
  void commit() { committed_ = true; }

 private:
  std::vector<std::string> written_;
  bool committed_ = false;
};

struct FrameOptions {
  double frame_len_s = 0.025;
  double hop_s = 0.010;
  int fft_size = 0;
  int n_filters = 20;
  double f_min_hz = 0.0;
  double f_max_hz = 0.0;

  FrameConfig frame() const {
    FrameConfig c;
    c.frame_len_s = frame_len_s;
    c.hop_s = hop_s;
    c.fft_size = fft_size;
    return c;
  }
  MelConfig mel() const {
    MelConfig m;
    m.n_filters = n_filters;
    m.f_min_hz = f_min_hz;
    m.f_max_hz = f_max_hz;
    return m;
  }
};

void add_forest_options(CLI::App* cmd, ForestParams& p) {
  cmd->add_option("--trees", p.n_trees, "Trees per forest")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--max-features", p.max_features, "Candidate features per split (0 = floor(sqrt(d)))")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--min-samples-leaf", p.min_samples_leaf, "Minimum samples per leaf")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--max-depth", p.max_depth, "Maximum tree depth (0 = unlimited)")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--threads", p.threads, "Worker threads (result does not depend on it)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  const fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix + p.extension().string())).string();
}

std::string predictions_csv(const FeatureTable& table, const std::vector<Prediction>& predictions) {
  std::string out = "segment_id,label,vote_fraction\n";
  for (std::size_t i = 0; i < table.size(); ++i) {
    out += table[i].segment_id + "," + to_string(predictions[i].label) + "," +
           csv::format_real(predictions[i].vote_fraction) + "\n";
  }
  return out;
}

std::array<MeanSd, 9> aggregate_from_json(const nlohmann::json& report) {
  std::array<MeanSd, 9> out{};
  const auto& agg = report.at("aggregate");
  for (std::size_t a = 0; a < out.size(); ++a) {
    const auto& cell = agg.at(attribute_names()[a]);
    out[a] = {cell.at("mean").get<double>(), cell.at("sd").get<double>()};
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Swallow-sound feature extraction, statistics and dysphagia classification"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // synth
  SynthConfig synth;
  std::string synth_dir;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic swallow corpus (WAV files + annotations.csv)");
  synth_cmd->add_option("--out-dir", synth_dir, "Output directory")->required();
  synth_cmd->add_option("--n-normal", synth.n_normal, "Normal swallows")->capture_default_str();
  synth_cmd->add_option("--n-dysphagic", synth.n_dysphagic, "Dysphagic swallows")->capture_default_str();
  synth_cmd->add_option("--sample-rate", synth.sample_rate_hz, "Sample rate in Hz")->capture_default_str();
  synth_cmd->add_option("--duration", synth.segment_duration_s, "Swallow duration in seconds")->capture_default_str();
  synth_cmd->add_option("--separation", synth.separation, "Class contrast (0 = identical classes)")
      ->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();

  // extract
  std::string annotations_path, wav_path, extract_out;
  FrameOptions frame_opts;
  auto* extract_cmd = app.add_subcommand("extract", "Extract the 25-feature table from annotated recordings");
  extract_cmd->add_option("--annotations", annotations_path, "Annotation CSV")->required();
  extract_cmd->add_option("--wav", wav_path, "Recording for annotation files without a file column");
  extract_cmd->add_option("--out", extract_out, "Feature CSV to write")->required();
  extract_cmd->add_option("--frame-len", frame_opts.frame_len_s, "Frame length in seconds")->capture_default_str();
  extract_cmd->add_option("--hop", frame_opts.hop_s, "Frame hop in seconds")->capture_default_str();
  extract_cmd->add_option("--fft-size", frame_opts.fft_size, "FFT size (0 = next power of two)")->capture_default_str();
  extract_cmd->add_option("--n-filters", frame_opts.n_filters, "Mel filters")->capture_default_str();
  extract_cmd->add_option("--fmin", frame_opts.f_min_hz, "Lowest mel edge in Hz")->capture_default_str();
  extract_cmd->add_option("--fmax", frame_opts.f_max_hz, "Highest mel edge in Hz (0 = Nyquist)")->capture_default_str();

  // stats
  std::string stats_features, stats_out, grouping_name = "by_label";
  auto* stats_cmd = app.add_subcommand("stats", "Kruskal-Wallis significance table per feature");
  stats_cmd->add_option("--features", stats_features, "Feature CSV")->required();
  stats_cmd->add_option("--grouping", grouping_name, "by_label or by_consistency_within_label")
      ->capture_default_str()
      ->check(CLI::IsMember({"by_label", "by_consistency_within_label"}));
  stats_cmd->add_option("--out", stats_out,
                        "Table CSV (per-label tables get _normal/_dysphagic suffixes)")
      ->required();

  // reduce
  std::string reduce_features, reduce_out, method = "pca";
  TsneParams tsne_params;
  auto* reduce_cmd = app.add_subcommand("reduce", "Standardize features and embed them in 2-D (PCA or t-SNE)");
  reduce_cmd->add_option("--features", reduce_features, "Feature CSV")->required();
  reduce_cmd->add_option("--method", method, "pca or tsne")->capture_default_str()->check(CLI::IsMember({"pca", "tsne"}));
  reduce_cmd->add_option("--out", reduce_out, "Embedding CSV")->required();
  reduce_cmd->add_option("--perplexity", tsne_params.perplexity, "t-SNE perplexity (capped at (n-1)/3)")
      ->capture_default_str();
  reduce_cmd->add_option("--tsne-iterations", tsne_params.iterations, "t-SNE iterations")->capture_default_str();
  reduce_cmd->add_option("--learning-rate", tsne_params.learning_rate, "t-SNE learning rate")->capture_default_str();
  reduce_cmd->add_option("--early-exaggeration", tsne_params.early_exaggeration, "t-SNE early exaggeration")
      ->capture_default_str();
  reduce_cmd->add_option("--seed", tsne_params.seed, "t-SNE seed")->capture_default_str();

  // train
  std::string train_features, model_out;
  ForestParams train_params;
  auto* train_cmd = app.add_subcommand("train", "Train a random forest on a feature CSV and save it as JSON");
  train_cmd->add_option("--features", train_features, "Feature CSV")->required();
  train_cmd->add_option("--out", model_out, "Model JSON")->required();
  train_cmd->add_option("--seed", train_params.seed, "Random seed")->capture_default_str();
  add_forest_options(train_cmd, train_params);

  // predict
  std::string model_in, predict_features, predict_out;
  auto* predict_cmd = app.add_subcommand("predict", "Classify feature rows with a saved model");
  predict_cmd->add_option("--model", model_in, "Model JSON")->required();
  predict_cmd->add_option("--features", predict_features, "Feature CSV")->required();
  predict_cmd->add_option("--out", predict_out, "Predictions CSV (segment_id,label,vote_fraction)")->required();

  // evaluate
  std::string eval_features, eval_out, eval_csv;
  EvaluationConfig eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Repeated stratified train/test evaluation of the random forest");
  eval_cmd->add_option("--features", eval_features, "Feature CSV")->required();
  eval_cmd->add_option("--out", eval_out, "Report JSON")->required();
  eval_cmd->add_option("--summary-csv", eval_csv, "Also write a mean/SD summary CSV");
  eval_cmd->add_option("--iterations", eval.iterations, "Random splits")->capture_default_str()->check(CLI::PositiveNumber);
  eval_cmd->add_option("--train-fraction", eval.train_fraction, "Training share per class")
      ->capture_default_str()
      ->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--seed", eval.seed, "Random seed")->capture_default_str();
  eval_cmd->add_option("--eval-threads", eval.threads, "Iterations run concurrently (result does not depend on it)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  add_forest_options(eval_cmd, eval.forest);

  // report
  std::string report_in, report_csv;
  auto* report_cmd = app.add_subcommand("report", "Print the summary table of a saved evaluation report");
  report_cmd->add_option("--report", report_in, "Report JSON")->required();
  report_cmd->add_option("--csv", report_csv, "Also write the summary as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  Outputs outputs;
  try {
    if (*synth_cmd) {
      const bool existed = fs::exists(synth_dir);
      synth.validate();
      const std::size_t total = static_cast<std::size_t>(synth.n_normal) + static_cast<std::size_t>(synth.n_dysphagic);
      for (std::size_t j = 0; j < total; ++j) {
        char name[48];
        std::snprintf(name, sizeof name, "swallow_%04zu.wav", j + 1);
        outputs.track((fs::path(synth_dir) / name).string());
      }
      outputs.track((fs::path(synth_dir) / "annotations.csv").string());
      if (!existed) outputs.track(synth_dir);
      const auto corpus = generate_synthetic_corpus(synth, synth_dir);
      std::cout << "wrote " << corpus.wav_files.size() << " recordings and " << corpus.annotations_path << "\n";
    } else if (*extract_cmd) {
      const auto table = extract_from_annotations(
          annotations_path, wav_path.empty() ? std::nullopt : std::optional<std::string>(wav_path), frame_opts.frame(),
          frame_opts.mel());
      outputs.write(extract_out, format_feature_csv(table));
    } else if (*stats_cmd) {
      const auto table = read_feature_csv(stats_features);
      const auto grouping =
          grouping_name == "by_label" ? Grouping::by_label : Grouping::by_consistency_within_label;
      for (const auto& t : feature_significance_table(table, grouping)) {
        const std::string path = grouping == Grouping::by_label ? stats_out : with_suffix(stats_out, "_" + t.scope);
        outputs.write(path, format_significance_csv(t));
        std::size_t significant = 0;
        for (const auto& r : t.rows) significant += r.significant;
        std::cout << t.scope << ": " << significant << " of " << t.rows.size() << " features significant at p < 0.05\n";
      }
    } else if (*reduce_cmd) {
      const auto table = read_feature_csv(reduce_features);
      const auto data = to_dataset(table);
      const auto z = standardize(data.X);
      Embedding embedding;
      if (method == "pca") {
        embedding = pca_fit_transform(z.Z, 2);
        std::cout << "explained variance ratio: " << embedding.explained_variance_ratio[0] << ", "
                  << embedding.explained_variance_ratio[1] << "\n";
      } else {
        const auto result = tsne(z.Z, tsne_params);
        embedding = result.embedding;
        std::cout << "t-SNE perplexity " << result.perplexity_used << ", KL " << result.kl_final << "\n";
      }
      std::vector<std::string> labels;
      for (const auto& r : table) labels.emplace_back(to_string(r.label));
      outputs.write(reduce_out, format_embedding_csv(embedding, labels, data.ids));
    } else if (*train_cmd) {
      const auto data = to_dataset(read_feature_csv(train_features));
      const auto forest = train_forest(data, train_params);
      outputs.write(model_out, forest_to_json(forest).dump(1) + "\n");
    } else if (*predict_cmd) {
      nlohmann::json model;
      try {
        model = nlohmann::json::parse(csv::read_file(model_in));
      } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::format, model_in + ": " + e.what());
      }
      const auto forest = forest_from_json(model);
      const auto table = read_feature_csv(predict_features);
      const auto data = to_dataset(table);
      if (data.n_features() != forest.n_features) throw Error(Errc::shape, "feature count differs from model");
      outputs.write(predict_out, predictions_csv(table, predict_all(forest, data.X)));
    } else if (*eval_cmd) {
      const auto data = to_dataset(read_feature_csv(eval_features));
      if (data.count(Label::normal) == 0 || data.count(Label::dysphagic) == 0) {
        throw Error(Errc::training, "evaluation needs both normal and dysphagic rows");
      }
      const auto report = repeated_evaluation(data, eval);
      outputs.write(eval_out, report_to_json(report).dump(1) + "\n");
      if (!eval_csv.empty()) outputs.write(eval_csv, report_summary_csv(report));
      std::cout << format_summary_table(report.aggregate);
    } else if (*report_cmd) {
      nlohmann::json report;
      std::array<MeanSd, 9> aggregate{};
      try {
        report = nlohmann::json::parse(csv::read_file(report_in));
        aggregate = aggregate_from_json(report);
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::format, report_in + ": " + e.what());
      }
      if (!report_csv.empty()) {
        std::string out = "attribute,mean,sd\n";
        for (std::size_t a = 0; a < aggregate.size(); ++a) {
          out += attribute_names()[a] + "," + csv::format_real(aggregate[a].mean) + "," +
                 csv::format_real(aggregate[a].sd) + "\n";
        }
        outputs.write(report_csv, out);
      }
      std::cout << format_summary_table(aggregate);
    }
    outputs.commit();
    return 0;
  } catch (const Error& e) {
    std::cerr << "swallow: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "swallow: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
