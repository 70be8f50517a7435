#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fdaguard/core.hpp"
#include "fdaguard/pipeline.hpp"
#include "fdaguard/simgen.hpp"

namespace fdaguard {

/// Shortest text that reads back to the same double (17 significant digits).
std::string format_double(double x);

/// Curve matrix CSV: optional header "id,t=<t1>,...", then one row per curve
/// holding its id and m values. Without a header the grid is m equidistant
/// points on [0, 1]. `source` names the input in error messages.
FunctionalSample parse_curves_csv(std::istream& in, const std::string& source);
FunctionalSample read_curves_csv(const std::string& path);
void write_curves_csv(std::ostream& out, const FunctionalSample& sample);
void write_curves_csv(const std::string& path, const FunctionalSample& sample);

/// One file per response dimension; ids and grids must agree.
MultivariateFunctionalSample read_multivariate_csv(const std::vector<std::string>& paths);

/// Flat key=value settings; '#' starts a comment.
class RunConfig {
 public:
  static const std::vector<std::string>& known_keys();

  static RunConfig load(const std::string& path);
  static RunConfig parse(std::istream& in, const std::string& source);

  void set(const std::string& key, const std::string& value);
  std::optional<std::string> get(const std::string& key) const;
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string text(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key, double fallback) const;
  std::size_t count(const std::string& key, std::size_t fallback) const;
  std::uint64_t seed(std::uint64_t fallback) const;

 private:
  std::map<std::string, std::string> values_;
};

nlohmann::json to_json(const OutlierReport& report, const std::vector<TransformStep>& steps,
                       const DetectOptions& options);
nlohmann::json to_json(const EnvelopeTestResult& result, const EnvelopeOptions& options);
nlohmann::json to_json(const StudyTable& table, const StudyOptions& options);

/// Long-format plot data: curve_id,stage,t,value,role.
void write_plot_csv(std::ostream& out, const OutlierReport& report);

/// Rows are methods; one column per model (rank tables) or per model and
/// metric (detection tables).
void write_study_table(std::ostream& out, const StudyTable& table);

}  // namespace fdaguard
