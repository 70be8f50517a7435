#include "fdaguard/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace fdaguard {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string unquote(std::string s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(unquote(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start))));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> to_number(const std::string& text) {
  double x = 0.0;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, x);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return x;
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  return out;
}

}  // namespace

FunctionalSample parse_curves_csv(std::istream& in, const std::string& source) {
  std::vector<double> grid;
  bool header = false;
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(line);
    auto where = [&](std::size_t col) {
      return source + " row " + std::to_string(line_no) + ", column " + std::to_string(col + 1);
    };
    if (rows.empty() && !header && ids.empty() && (fields[0] == "id" || fields[0] == "ID")) {
      header = true;
      for (std::size_t c = 1; c < fields.size(); ++c) {
        std::string f = fields[c];
        if (f.rfind("t=", 0) == 0) f = f.substr(2);
        const auto t = to_number(f);
        if (!t || !std::isfinite(*t)) throw Error(where(c) + ": cannot parse design point '" + fields[c] + "'");
        grid.push_back(*t);
      }
      width = fields.size();
      continue;
    }
    if (fields.size() < 2) throw Error(where(1) + ": expected an id followed by curve values");
    if (width == 0) width = fields.size();
    if (fields.size() != width)
      throw Error(source + " row " + std::to_string(line_no) + ": expected " + std::to_string(width - 1) + " values, found " +
                  std::to_string(fields.size() - 1));
    std::vector<double> values;
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const auto x = to_number(fields[c]);
      if (!x || !std::isfinite(*x)) throw Error(where(c) + ": cannot parse '" + fields[c] + "' as a finite number");
      values.push_back(*x);
    }
    ids.push_back(fields[0]);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(source + ": no curves found");
  const std::size_t m = rows.front().size();
  if (m < 2) throw Error(source + ": curves need at least 2 design points");
  DesignGrid g = header ? DesignGrid(grid) : DesignGrid::equidistant(m);
  Matrix values(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(m));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < m; ++j) values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  try {
    return FunctionalSample(std::move(g), std::move(values), std::move(ids));
  } catch (const Error& e) {
    throw Error(source + ": " + e.what());
  }
}

FunctionalSample read_curves_csv(const std::string& path) {
  auto in = open_input(path);
  return parse_curves_csv(in, path);
}

void write_curves_csv(std::ostream& out, const FunctionalSample& sample) {
  out << "id";
  for (double t : sample.grid.points()) out << ",t=" << format_double(t);
  out << '\n';
  for (std::size_t i = 0; i < sample.n(); ++i) {
    out << sample.ids[i];
    for (std::size_t j = 0; j < sample.m(); ++j)
      out << ',' << format_double(sample.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    out << '\n';
  }
}

void write_curves_csv(const std::string& path, const FunctionalSample& sample) {
  auto out = open_output(path);
  write_curves_csv(out, sample);
}

MultivariateFunctionalSample read_multivariate_csv(const std::vector<std::string>& paths) {
  if (paths.empty()) throw Error("no input files");
  std::vector<FunctionalSample> margins;
  for (const auto& p : paths) margins.push_back(read_curves_csv(p));
  std::vector<Matrix> dims;
  for (std::size_t k = 0; k < margins.size(); ++k) {
    if (!(margins[k].grid == margins.front().grid)) throw Error(paths[k] + ": design grid differs from " + paths.front());
    if (margins[k].ids != margins.front().ids) throw Error(paths[k] + ": curve ids differ from " + paths.front());
    dims.push_back(margins[k].values);
  }
  return MultivariateFunctionalSample(margins.front().grid, std::move(dims), margins.front().ids);
}

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys{
      "depth", "steps", "factor", "side", "alpha", "seed", "K", "lambda_w", "replicates", "measure", "kind",
      "models", "methods", "sets", "model", "n", "outliers", "m", "threads", "stage"};
  return keys;
}

RunConfig RunConfig::load(const std::string& path) {
  auto in = open_input(path);
  return parse(in, path);
}

RunConfig RunConfig::parse(std::istream& in, const std::string& source) {
  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw Error(source + " line " + std::to_string(line_no) + ": expected key=value");
    try {
      config.set(trim(body.substr(0, eq)), unquote(trim(body.substr(eq + 1))));
    } catch (const Error& e) {
      throw Error(source + " line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& keys = known_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw Error("unknown config key '" + key + "'");
  values_[key] = value;
}

std::optional<std::string> RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string RunConfig::text(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double RunConfig::number(const std::string& key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  const auto x = to_number(*v);
  if (!x || !std::isfinite(*x)) throw Error("config key '" + key + "': expected a number, got '" + *v + "'");
  return *x;
}

std::size_t RunConfig::count(const std::string& key, std::size_t fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  std::size_t x = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
  if (ec != std::errc() || ptr != v->data() + v->size() || v->empty())
    throw Error("config key '" + key + "': expected a nonnegative integer, got '" + *v + "'");
  return x;
}

std::uint64_t RunConfig::seed(std::uint64_t fallback) const {
  const auto v = get("seed");
  if (!v) return fallback;
  std::uint64_t x = 0;
  const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
  if (ec != std::errc() || ptr != v->data() + v->size() || v->empty())
    throw Error("config key 'seed': expected a nonnegative integer, got '" + *v + "'");
  return x;
}

namespace {

using nlohmann::json;

json curve_json(const Eigen::RowVectorXd& c) { return std::vector<double>(c.data(), c.data() + c.size()); }

json boxplot_json(const FunctionalBoxplot& box, const std::vector<std::string>& ids) {
  return {{"side", to_string(box.side)},
          {"median_id", ids[box.median_index]},
          {"median", curve_json(box.median_curve)},
          {"central_lower", curve_json(box.central_lower)},
          {"central_upper", curve_json(box.central_upper)},
          {"fence_lower", curve_json(box.fence_lower)},
          {"fence_upper", curve_json(box.fence_upper)},
          {"outliers", box.outlier_ids}};
}

}  // namespace

json to_json(const OutlierReport& report, const std::vector<TransformStep>& steps, const DetectOptions& options) {
  json curves = json::array();
  std::vector<std::string> flagged;
  for (std::size_t i = 0; i < report.ids.size(); ++i) {
    const auto& v = report.curves[i];
    json c{{"id", report.ids[i]},
           {"label", v.label ? v.label->name : "clean"},
           {"stage", v.label ? json(v.label->stage) : json(nullptr)},
           {"depth_value", v.depth_value},
           {"exceedance", v.exceedance ? json(v.exceedance->amount) : json(nullptr)},
           {"location", v.location ? json(*v.location) : json(nullptr)}};
    curves.push_back(std::move(c));
    if (v.label) flagged.push_back(report.ids[i]);
  }
  json stages = json::array();
  for (const auto& s : report.stages) {
    std::vector<std::string> out_ids;
    for (auto i : s.flagged) out_ids.push_back(report.ids[i]);
    std::vector<std::string> new_ids;
    for (auto i : report.labelled_at(s.index)) new_ids.push_back(report.ids[i]);
    json bands = json::array();
    for (const auto& box : s.boxplots) bands.push_back(boxplot_json(box, report.ids));
    stages.push_back({{"index", s.index},
                      {"step", s.step},
                      {"name", s.name},
                      {"grid", s.curves.front().grid.points()},
                      {"flagged", out_ids},
                      {"labelled", new_ids},
                      {"bands", bands}});
  }
  return {{"schema_version", 1},
          {"command", "detect"},
          {"depth", to_string(options.depth)},
          {"factor", options.factor},
          {"steps", steps_to_string(steps)},
          {"n", report.ids.size()},
          {"outliers", flagged},
          {"curves", curves},
          {"stages", stages}};
}

json to_json(const EnvelopeTestResult& result, const EnvelopeOptions& options) {
  json stages = json::array();
  for (const auto& env : result.envelopes)
    stages.push_back({{"step", env.step},
                      {"grid", env.grid.points()},
                      {"lower", curve_json(env.lower)},
                      {"upper", curve_json(env.upper)}});
  return {{"schema_version", 1},
          {"command", "envelope"},
          {"depth", to_string(options.depth)},
          {"measure", to_string(options.measure)},
          {"steps", steps_to_string(options.steps)},
          {"alpha", result.alpha},
          {"simulations", result.simulations},
          {"p_value", result.p_value},
          {"rejected", result.rejected},
          {"measure_of_observed", result.observed_measure},
          {"observed_joint_rank", result.ranking.extremeness[0]},
          {"observed_stage_ranks", row_vector(result.ranking.ranks, 0)},
          {"envelopes", stages}};
}

json to_json(const StudyTable& table, const StudyOptions& options) {
  json rows = json::array();
  for (std::size_t k = 0; k < table.methods.size(); ++k) {
    json cells = json::array();
    for (std::size_t c = 0; c < table.models.size(); ++c) {
      const auto& s = table.cells[k][c];
      json cell{{"model", table.models[c]}, {"replicates", s.replicates}};
      if (table.kind == "detection") {
        cell["pc"] = s.pc;
        cell["pf"] = s.pf;
        cell["rand_index"] = s.rand_index;
      } else {
        cell["avg_rank"] = s.avg_rank;
      }
      cells.push_back(std::move(cell));
    }
    rows.push_back({{"method", table.methods[k]}, {"cells", cells}});
  }
  return {{"schema_version", 1},
          {"command", "study"},
          {"kind", table.kind},
          {"replicates", options.replicates},
          {"n_clean", options.n_clean},
          {"n_outlier", options.n_outlier},
          {"m", options.m},
          {"seed", options.seed},
          {"factor", options.factor},
          {"models", table.models},
          {"methods", rows}};
}

void write_plot_csv(std::ostream& out, const OutlierReport& report) {
  out << "curve_id,stage,t,value,role\n";
  auto band = [&](const std::string& id, const std::string& stage, const DesignGrid& grid, const Eigen::RowVectorXd& c,
                  const char* role) {
    for (std::size_t j = 0; j < grid.size(); ++j)
      out << id << ',' << stage << ',' << format_double(grid[j]) << ',' << format_double(c(static_cast<Eigen::Index>(j)))
          << ',' << role << '\n';
  };
  for (const auto& s : report.stages) {
    for (std::size_t b = 0; b < s.boxplots.size(); ++b) {
      const auto& box = s.boxplots[b];
      const std::string stage =
          s.boxplots.size() == 1 ? std::to_string(s.index) : std::to_string(s.index) + "." + std::to_string(b + 1);
      for (std::size_t i = 0; i < report.ids.size(); ++i)
        band(report.ids[i], stage, box.grid, s.curves[b].values.row(static_cast<Eigen::Index>(i)), "curve");
      band(report.ids[box.median_index], stage, box.grid, box.median_curve, "median");
      band("", stage, box.grid, box.central_lower, "central_lo");
      band("", stage, box.grid, box.central_upper, "central_hi");
      band("", stage, box.grid, box.fence_lower, "fence_lo");
      band("", stage, box.grid, box.fence_upper, "fence_hi");
    }
  }
}

void write_study_table(std::ostream& out, const StudyTable& table) {
  out << "method";
  for (int model : table.models) {
    if (table.kind == "detection")
      out << ",model" << model << "_pc,model" << model << "_pf,model" << model << "_ri";
    else
      out << ",model" << model;
  }
  out << '\n';
  auto cell = [](double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return std::isnan(x) ? std::string("NA") : std::string(buf);
  };
  for (std::size_t k = 0; k < table.methods.size(); ++k) {
    const auto& name = table.methods[k];
    out << (name.find(',') != std::string::npos ? "\"" + name + "\"" : name);
    for (const auto& s : table.cells[k]) {
      if (table.kind == "detection")
        out << ',' << cell(s.pc) << ',' << cell(s.pf) << ',' << cell(s.rand_index);
      else
        out << ',' << cell(s.avg_rank);
    }
    out << '\n';
  }
}

}  // namespace fdaguard
