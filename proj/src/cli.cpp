#include "fdaguard/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>

#include "fdaguard/io.hpp"

namespace fdaguard {

namespace {

constexpr std::uint64_t kDefaultSeed = 20240101;

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

/// Options that mirror RunConfig keys; flags win over the config file.
class Settings {
 public:
  explicit Settings(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_, "key=value settings file");
  }

  void add(const std::string& key, const std::string& help) {
    const std::string names = key == "lambda_w" ? "--lambda_w,--lambda-w" : "--" + key;
    options_[key] = app_->add_option(names, flags_[key], help);
  }

  RunConfig resolve() const {
    RunConfig config = config_path_.empty() ? RunConfig() : RunConfig::load(config_path_);
    for (const auto& [key, value] : flags_)
      if (options_.at(key)->count() > 0) config.set(key, value);
    if (!config.has("seed"))
      if (const char* env = std::getenv("FDAGUARD_SEED"); env && *env) config.set("seed", env);
    return config;
  }

 private:
  CLI::App* app_;
  std::string config_path_;
  std::map<std::string, std::string> flags_;
  std::map<std::string, CLI::Option*> options_;
};

void write_json(const nlohmann::json& doc, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << doc.dump(2) << '\n';
    return;
  }
  std::ofstream file(path);
  if (!file) throw Error("cannot write '" + path + "'");
  file << doc.dump(2) << '\n';
}

std::vector<TransformStep> configured_steps(const RunConfig& config, const std::string& fallback) {
  auto steps = parse_steps(config.text("steps", fallback));
  const std::size_t directions = config.count("K", 500);
  if (directions == 0 && config.has("K")) throw Error("K must be positive");
  const double penalty = config.number("lambda_w", -1.0);
  if (config.has("lambda_w") && penalty < 0.0) throw Error("lambda_w must be nonnegative");
  for (auto& s : steps) {
    s.directions = directions;
    s.penalty = penalty;
    if (config.has("seed")) s.seed = derive_seed(config.seed(kDefaultSeed), 0x4F);
  }
  return steps;
}

DepthOptions configured_depth_options(const RunConfig& config) {
  DepthOptions options;
  if (config.has("seed")) options.mcd.seed = derive_seed(config.seed(kDefaultSeed), 0x4D4344);
  return options;
}

std::vector<Side> configured_sides(const RunConfig& config, std::size_t stages) {
  if (!config.has("side")) return {};
  const auto tokens = split(*config.get("side"), ',');
  std::vector<Side> sides;
  for (const auto& t : tokens) sides.push_back(side_from_string(t));
  if (sides.size() == 1) return std::vector<Side>(stages, sides.front());
  if (sides.size() != stages)
    throw Error("side lists " + std::to_string(sides.size()) + " entries for " + std::to_string(stages) + " stages");
  return sides;
}

int cmd_detect(const std::vector<std::string>& inputs, const RunConfig& config, const std::string& output,
               const std::string& plot, std::ostream& out) {
  const bool multivariate = inputs.size() > 1;
  const auto steps = configured_steps(config, multivariate ? "t0,o" : "t0,t1,t2");
  validate_steps(steps, multivariate);
  DetectOptions options;
  options.depth = depth_from_string(config.text("depth", "linf"));
  options.factor = config.number("factor", 1.5);
  if (options.factor < 0.0) throw Error("factor must be nonnegative");
  options.sides = configured_sides(config, steps.size());
  options.depth_options = configured_depth_options(config);

  const OutlierReport report = multivariate ? sequential_detect(read_multivariate_csv(inputs), steps, options)
                                            : sequential_detect(read_curves_csv(inputs.front()), steps, options);
  write_json(to_json(report, steps, options), output, out);
  if (!plot.empty()) {
    std::ofstream file(plot);
    if (!file) throw Error("cannot write '" + plot + "'");
    write_plot_csv(file, report);
  }
  return 0;
}

int cmd_envelope(const std::string& observed_path, const std::string& nulls_path, const RunConfig& config,
                 const std::string& output, std::ostream& out) {
  const auto observed = read_curves_csv(observed_path);
  const auto nulls = read_curves_csv(nulls_path);
  if (observed.n() != 1) throw Error(observed_path + ": expected exactly one observed curve, found " + std::to_string(observed.n()));
  if (!(observed.grid == nulls.grid)) throw Error("design grids of '" + observed_path + "' and '" + nulls_path + "' differ");
  EnvelopeOptions options;
  options.steps = configured_steps(config, "t0");
  validate_steps(options.steps, false);
  options.depth = depth_from_string(config.text("depth", "dq"));
  options.measure = joint_measure_from_string(config.text("measure", "dq"));
  options.alpha = config.number("alpha", 0.05);
  options.depth_options = configured_depth_options(config);
  const auto result = global_envelope_test(observed.values.row(0), nulls.values, observed.grid, options);
  write_json(to_json(result, options), output, out);
  return 0;
}

std::string truth_path(const std::string& output) {
  const std::string ext = ".csv";
  if (output.size() > ext.size() && output.compare(output.size() - ext.size(), ext.size(), ext) == 0)
    return output.substr(0, output.size() - ext.size()) + ".truth.csv";
  return output + ".truth.csv";
}

int cmd_simulate(const RunConfig& config, const std::string& output, std::ostream& out) {
  if (!config.has("model")) throw Error("simulate needs --model");
  ModelSpec spec;
  spec.model = static_cast<int>(config.count("model", 0));
  const std::size_t n = config.count("n", 50);
  const std::size_t outliers = config.count("outliers", spec.model == 0 ? 0 : 1);
  if (outliers > n) throw Error("more outliers than curves");
  spec.n_clean = n - outliers;
  spec.n_outlier = outliers;
  const std::size_t m = config.count("m", 30);
  if (m < 2) throw Error("m must be at least 2");
  spec.grid = DesignGrid::equidistant(m);
  spec.seed = config.seed(kDefaultSeed);
  const Dataset data = make_dataset(spec);
  std::vector<bool> truth(data.sample.n(), false);
  for (auto i : data.outliers) truth[i] = true;
  auto write_truth = [&](std::ostream& os) {
    os << "id,outlier\n";
    for (std::size_t i = 0; i < data.sample.n(); ++i) os << data.sample.ids[i] << ',' << (truth[i] ? 1 : 0) << '\n';
  };
  if (output.empty()) {
    write_curves_csv(out, data.sample);
    return 0;
  }
  write_curves_csv(output, data.sample);
  std::ofstream file(truth_path(output));
  if (!file) throw Error("cannot write '" + truth_path(output) + "'");
  write_truth(file);
  return 0;
}

int cmd_study(const RunConfig& config, const std::string& output, const std::string& table_path, std::ostream& out) {
  const std::string kind = config.text("kind", "rank");
  if (kind != "rank" && kind != "detection" && kind != "transform")
    throw Error("unknown study kind '" + kind + "' (expected rank, detection or transform)");
  StudyOptions options;
  options.replicates = config.count("replicates", 500);
  if (options.replicates == 0) throw Error("replicates must be positive");
  const std::size_t n = config.count("n", 50);
  options.n_outlier = config.count("outliers", kind == "detection" ? 5 : 1);
  if (options.n_outlier >= n) throw Error("outliers must be fewer than curves");
  options.n_clean = n - options.n_outlier;
  options.m = config.count("m", 30);
  options.seed = config.seed(kDefaultSeed);
  options.threads = static_cast<unsigned>(config.count("threads", 1));
  options.factor = config.number("factor", 1.5);
  options.depth_options = configured_depth_options(config);
  std::vector<int> models;
  for (const auto& t : split(config.text("models", "1,2,3,4,5,6"), ',')) {
    try {
      models.push_back(std::stoi(t));
    } catch (const std::exception&) {
      throw Error("cannot parse model '" + t + "'");
    }
  }

  StudyTable table;
  if (kind == "transform") {
    std::vector<std::vector<TransformKind>> sets;
    for (const auto& set : split(config.text("sets", "t0;t0,t1,d1;t0,t1,t2;t0,d1,d2;t0,t1,t2,d1,d2"), ';')) {
      std::vector<TransformKind> kinds;
      for (const auto& step : parse_steps(set)) kinds.push_back(step.kind);
      sets.push_back(std::move(kinds));
    }
    std::vector<DepthNotion> depths;
    for (const auto& t : split(config.text("methods", "linf,dq"), ',')) depths.push_back(depth_from_string(t));
    table = transform_comparison_study(models, sets, depths, options);
  } else {
    std::vector<Method> methods;
    const std::string fallback = kind == "rank" ? "linf,dq,linf_b,dq_b" : "linf_c,dq_c";
    for (const auto& t : split(config.text("methods", fallback), ',')) methods.push_back(parse_method(t));
    table = kind == "rank" ? rank_study(models, methods, options) : detection_study(models, methods, options);
  }
  write_json(to_json(table, options), output, out);
  if (!table_path.empty()) {
    std::ofstream file(table_path);
    if (!file) throw Error("cannot write '" + table_path + "'");
    write_study_table(file, table);
  }
  return 0;
}

int cmd_depth(const std::string& input, const RunConfig& config, const std::string& output, std::ostream& out) {
  const auto sample = read_curves_csv(input);
  const DepthNotion notion = depth_from_string(config.text("depth", "linf"));
  DepthOptions options = configured_depth_options(config);
  options.side = side_from_string(config.text("side", "two-sided"));
  const DepthResult depth = compute_depth(sample, notion, options);
  const auto ranks = depth.extremeness_ranks();
  std::ofstream file;
  if (!output.empty()) {
    file.open(output);
    if (!file) throw Error("cannot write '" + output + "'");
  }
  std::ostream& os = output.empty() ? out : file;
  os << "id," << to_string(notion) << ",extremeness_rank\n";
  for (std::size_t i = 0; i < sample.n(); ++i)
    os << sample.ids[i] << ',' << format_double(depth.values[i]) << ',' << format_double(ranks[i]) << '\n';
  return 0;
}

int cmd_transform(const std::vector<std::string>& inputs, const RunConfig& config, const std::string& output,
                  std::ostream& out) {
  const bool multivariate = inputs.size() > 1;
  const auto steps = configured_steps(config, multivariate ? "o" : "t0,t1,t2");
  const auto stages = multivariate ? apply_sequence(read_multivariate_csv(inputs), steps)
                                   : apply_sequence(read_curves_csv(inputs.front()), steps);
  const std::size_t stage = config.count("stage", stages.size() - 1);
  if (stage >= stages.size())
    throw Error("stage " + std::to_string(stage) + " out of range (sequence has " + std::to_string(stages.size()) + ")");
  if (output.empty()) {
    write_curves_csv(out, stages[stage]);
  } else {
    write_curves_csv(output, stages[stage]);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Functional outlier detection by sequential transformations"};
  app.name("fdaguard");
  app.require_subcommand(1);

  std::vector<std::string> inputs;
  std::string input, output, plot, observed, nulls, table;

  auto* detect = app.add_subcommand("detect", "Flag and classify outliers with per-stage functional boxplots");
  detect->add_option("inputs", inputs, "Curve CSV (one file per dimension)")->required();
  Settings detect_settings(detect);
  for (auto key : {"depth", "steps", "factor", "side", "seed", "K", "lambda_w"}) detect_settings.add(key, "");
  detect->add_option("-o,--output", output, "Report JSON (stdout if omitted)");
  detect->add_option("--plot", plot, "Long-format plot CSV");

  auto* envelope = app.add_subcommand("envelope", "Global envelope test with joint stage ranking");
  envelope->add_option("--observed", observed, "CSV holding the observed curve")->required();
  envelope->add_option("--nulls", nulls, "CSV holding the null simulations")->required();
  Settings envelope_settings(envelope);
  for (auto key : {"depth", "steps", "measure", "alpha", "seed", "K", "lambda_w"}) envelope_settings.add(key, "");
  envelope->add_option("-o,--output", output, "Result JSON (stdout if omitted)");

  auto* simulate = app.add_subcommand("simulate", "Draw a dataset from models 0-6");
  Settings simulate_settings(simulate);
  for (auto key : {"model", "n", "outliers", "m", "seed"}) simulate_settings.add(key, "");
  simulate->add_option("-o,--output", output, "Curve CSV; a .truth.csv sidecar is written next to it");

  auto* study = app.add_subcommand("study", "Monte Carlo rank, detection or transformation study");
  Settings study_settings(study);
  for (auto key : {"kind", "models", "methods", "sets", "replicates", "n", "outliers", "m", "seed", "threads", "factor"})
    study_settings.add(key, "");
  study->add_option("-o,--output", output, "Metrics JSON (stdout if omitted)");
  study->add_option("--table", table, "Table CSV");

  auto* depth = app.add_subcommand("depth", "Per-curve depth values");
  depth->add_option("input", input, "Curve CSV")->required();
  Settings depth_settings(depth);
  for (auto key : {"depth", "side", "seed"}) depth_settings.add(key, "");
  depth->add_option("-o,--output", output, "CSV (stdout if omitted)");

  auto* transform = app.add_subcommand("transform", "Transformed curves of one stage");
  transform->add_option("inputs", inputs, "Curve CSV (one file per dimension)")->required();
  Settings transform_settings(transform);
  for (auto key : {"steps", "stage", "seed", "K", "lambda_w"}) transform_settings.add(key, "");
  transform->add_option("-o,--output", output, "CSV (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (detect->parsed()) return cmd_detect(inputs, detect_settings.resolve(), output, plot, out);
    if (envelope->parsed()) return cmd_envelope(observed, nulls, envelope_settings.resolve(), output, out);
    if (simulate->parsed()) return cmd_simulate(simulate_settings.resolve(), output, out);
    if (study->parsed()) return cmd_study(study_settings.resolve(), output, table, out);
    if (depth->parsed()) return cmd_depth(input, depth_settings.resolve(), output, out);
    if (transform->parsed()) return cmd_transform(inputs, transform_settings.resolve(), output, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace fdaguard
