#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <unistd.h>

#include <json.hpp>

#include "fdaguard/cli.hpp"
#include "fdaguard/io.hpp"
#include "fdaguard/simgen.hpp"

using namespace fdaguard;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "fdaguard");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("fdaguard_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void same_json(const json& a, const json& b, const std::string& where) {
  INFO(where);
  REQUIRE(a.type() == b.type());
  if (a.is_number()) {
    const double x = a.get<double>(), y = b.get<double>();
    CHECK(std::abs(x - y) <= 1e-9 * (1.0 + std::abs(y)));
  } else if (a.is_array()) {
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) same_json(a[i], b[i], where + "[" + std::to_string(i) + "]");
  } else if (a.is_object()) {
    REQUIRE(a.size() == b.size());
    for (auto it = b.begin(); it != b.end(); ++it) {
      REQUIRE(a.contains(it.key()));
      same_json(a[it.key()], it.value(), where + "." + it.key());
    }
  } else {
    CHECK(a == b);
  }
}

std::string curves_csv(const Matrix& v) {
  std::ostringstream os;
  write_curves_csv(os, FunctionalSample(DesignGrid::equidistant(static_cast<std::size_t>(v.cols())), v));
  return os.str();
}

}  // namespace

TEST_CASE("simulate is deterministic and round-trips") {
  TempDir dir;
  const auto a = dir / "a.csv";
  const auto b = dir / "b.csv";
  CHECK(cli({"simulate", "--model", "0", "--n", "50", "--seed", "7", "-o", a}).code == 0);
  CHECK(cli({"simulate", "--model", "0", "--n", "50", "--seed", "7", "-o", b}).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(dir / "a.truth.csv") == slurp(dir / "b.truth.csv"));

  CHECK(cli({"simulate", "--model", "3", "--n", "20", "--outliers", "2", "--seed", "11", "-o", a}).code == 0);
  const auto back = read_curves_csv(a);
  const auto truth = make_dataset(ModelSpec{3, 18, 2, DesignGrid::equidistant(30), 11});
  CHECK(back.ids == truth.sample.ids);
  CHECK((back.values - truth.sample.values).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(back.grid == truth.sample.grid);
  const auto detect = cli({"detect", a});
  CHECK(detect.code == 0);
  CHECK(json::parse(detect.out)["n"] == 20);

  CHECK(cli({"simulate", "--model", "1", "--n", "3", "--outliers", "5", "-o", a}).code == 2);
  CHECK(cli({"simulate", "-o", a}).code == 2);
}

TEST_CASE("seed falls back to the environment") {
  TempDir dir;
  ::setenv("FDAGUARD_SEED", "99", 1);
  CHECK(cli({"simulate", "--model", "2", "-o", dir / "env.csv"}).code == 0);
  ::unsetenv("FDAGUARD_SEED");
  CHECK(cli({"simulate", "--model", "2", "--seed", "99", "-o", dir / "flag.csv"}).code == 0);
  CHECK(slurp(dir / "env.csv") == slurp(dir / "flag.csv"));
  ::setenv("FDAGUARD_SEED", "5", 1);
  CHECK(cli({"simulate", "--model", "2", "--seed", "99", "-o", dir / "both.csv"}).code == 0);
  ::unsetenv("FDAGUARD_SEED");
  CHECK(slurp(dir / "both.csv") == slurp(dir / "flag.csv"));
}

TEST_CASE("config file with flag overrides") {
  TempDir dir;
  spit(dir / "run.cfg", "# detection\ndepth = mbd\nsteps = t0,d1\nfactor = 2\n");
  const auto data = dir / "d.csv";
  REQUIRE(cli({"simulate", "--model", "1", "--seed", "3", "-o", data}).code == 0);
  const auto r = cli({"detect", data, "--config", dir / "run.cfg"});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc["depth"] == "mbd");
  CHECK(doc["steps"] == "t0,d1");
  CHECK(doc["factor"] == 2.0);
  const auto o = cli({"detect", data, "--config", dir / "run.cfg", "--depth", "dq", "--factor", "1.5"});
  REQUIRE(o.code == 0);
  CHECK(json::parse(o.out)["depth"] == "dq");
  CHECK(json::parse(o.out)["factor"] == 1.5);

  spit(dir / "bad.cfg", "colour = blue\n");
  const auto bad = cli({"detect", data, "--config", dir / "bad.cfg"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("colour") != std::string::npos);
}

TEST_CASE("detect inputs and errors") {
  TempDir dir;
  spit(dir / "same.csv", "id,t=0,t=0.5,t=1\na,1,2,3\nb,1,2,3\nc,1,2,3\nd,1,2,3\n");
  const auto same = cli({"detect", dir / "same.csv", "--steps", "t0,d1"});
  REQUIRE(same.code == 0);
  CHECK(json::parse(same.out)["outliers"].empty());

  const auto comp = cli({"detect", dir / "same.csv", "--steps", "t2,t1"});
  CHECK(comp.code == 2);
  CHECK(comp.err.find("normalize requires centered input") != std::string::npos);

  spit(dir / "broken.csv", "id,t=0,t=0.5,t=1\na,1,2,3\nb,1,x2,3\n");
  const auto broken = cli({"detect", dir / "broken.csv"});
  CHECK(broken.code == 2);
  CHECK(broken.err.find("row 3, column 3") != std::string::npos);

  const auto missing = cli({"detect", dir / "nope.csv"});
  CHECK(missing.code == 2);
  CHECK(cli({"detect"}).code == 2);
  CHECK(cli({"frobnicate"}).code == 2);
  CHECK(cli({"detect", dir / "same.csv", "--depth", "tukey"}).code == 2);
  CHECK(cli({"--help"}).code == 0);
}

TEST_CASE("plot data export") {
  TempDir dir;
  const auto data = dir / "d.csv";
  REQUIRE(cli({"simulate", "--model", "1", "--seed", "3", "-o", data}).code == 0);
  REQUIRE(cli({"detect", data, "--steps", "t0,d1", "--plot", dir / "plot.csv", "-o", dir / "r.json"}).code == 0);
  std::istringstream plot(slurp(dir / "plot.csv"));
  std::string line;
  std::getline(plot, line);
  CHECK(line == "curve_id,stage,t,value,role");
  std::set<std::string> roles;
  while (std::getline(plot, line)) roles.insert(line.substr(line.rfind(',') + 1));
  CHECK(roles == std::set<std::string>{"curve", "median", "central_lo", "central_hi", "fence_lo", "fence_hi"});
}

TEST_CASE("golden detection report") {
  const std::string data = FDAGUARD_TEST_DATA;
  const auto r = cli({"detect", data + "/model1.csv", "--steps", "t0,t1,d1"});
  REQUIRE(r.code == 0);
  const auto got = json::parse(r.out);
  const auto want = json::parse(slurp(data + "/model1_report.json"));
  same_json(got, want, "report");

  std::ifstream truth(data + "/model1.truth.csv");
  std::string line, contaminant;
  std::getline(truth, line);
  while (std::getline(truth, line))
    if (line.substr(line.find(',') + 1) == "1") contaminant = line.substr(0, line.find(','));
  REQUIRE_FALSE(contaminant.empty());
  bool labelled = false;
  for (const auto& c : got["curves"])
    if (c["id"] == contaminant) labelled = c["label"] != "clean";
  CHECK(labelled);
}

TEST_CASE("envelope command") {
  TempDir dir;
  const auto nulls = gp_sample(std::vector<double>(25, 0.0), Kernel{1.0, 0.3, 2.0}, 199, DesignGrid::equidistant(25), 8);
  spit(dir / "nulls.csv", curves_csv(nulls.values));
  spit(dir / "copy.csv", curves_csv(nulls.values.row(42)));
  Matrix far = nulls.values.row(3);
  far.array() += 10.0 * (nulls.values.maxCoeff() - nulls.values.minCoeff());
  spit(dir / "far.csv", curves_csv(far));

  const auto copy = cli({"envelope", "--observed", dir / "copy.csv", "--nulls", dir / "nulls.csv"});
  REQUIRE(copy.code == 0);
  const auto c = json::parse(copy.out);
  CHECK(c["rejected"] == false);
  CHECK(c["p_value"].get<double>() >= 0.01);

  const auto shifted = cli({"envelope", "--observed", dir / "far.csv", "--nulls", dir / "nulls.csv"});
  REQUIRE(shifted.code == 0);
  const auto s = json::parse(shifted.out);
  CHECK(s["p_value"].get<double>() == 1.0 / 200.0);
  CHECK(s["rejected"] == true);
  CHECK(s["schema_version"] == 1);
  CHECK(s["envelopes"].size() == 1);

  const auto joint = cli({"envelope", "--observed", dir / "far.csv", "--nulls", dir / "nulls.csv", "--steps", "t0,d1",
                          "--measure", "erld"});
  REQUIRE(joint.code == 0);
  CHECK(json::parse(joint.out)["envelopes"].size() == 2);

  spit(dir / "short.csv", curves_csv(Matrix::Zero(1, 24)));
  CHECK(cli({"envelope", "--observed", dir / "short.csv", "--nulls", dir / "nulls.csv"}).code == 2);
  CHECK(cli({"envelope", "--observed", dir / "nulls.csv", "--nulls", dir / "nulls.csv"}).code == 2);
  CHECK(cli({"envelope", "--observed", dir / "far.csv", "--nulls", dir / "nulls.csv", "--alpha", "0.001"}).code == 2);
}

TEST_CASE("study command") {
  TempDir dir;
  CHECK(cli({"study", "--replicates", "0"}).code == 2);
  CHECK(cli({"study", "--kind", "tables"}).code == 2);
  const auto r = cli({"study", "--kind", "rank", "--replicates", "4", "--models", "1,5", "--methods", "dq,dq_b", "--table",
                      dir / "t.csv"});
  REQUIRE(r.code == 0);
  const auto doc = json::parse(r.out);
  CHECK(doc["kind"] == "rank");
  CHECK(doc["schema_version"] == 1);
  std::istringstream table(slurp(dir / "t.csv"));
  std::string header;
  std::getline(table, header);
  CHECK(header == "method,model1,model5");

  const auto d = cli({"study", "--kind", "detection", "--replicates", "3", "--models", "1", "--table", dir / "d.csv"});
  REQUIRE(d.code == 0);
  std::istringstream dt(slurp(dir / "d.csv"));
  std::getline(dt, header);
  CHECK(header == "method,model1_pc,model1_pf,model1_ri");

  const auto t = cli({"study", "--kind", "transform", "--replicates", "2", "--models", "5", "--sets", "t0;t0,d1"});
  REQUIRE(t.code == 0);
  CHECK(json::parse(t.out)["methods"].size() == 4);
}

TEST_CASE("depth and transform commands") {
  TempDir dir;
  const auto data = dir / "d.csv";
  REQUIRE(cli({"simulate", "--model", "1", "--n", "12", "--seed", "3", "-o", data}).code == 0);
  const auto d = cli({"depth", data, "--depth", "mbd"});
  REQUIRE(d.code == 0);
  std::istringstream rows(d.out);
  std::string line;
  std::getline(rows, line);
  CHECK(line == "id,mbd,extremeness_rank");
  int count = 0;
  while (std::getline(rows, line)) ++count;
  CHECK(count == 12);

  const auto t = cli({"transform", data, "--steps", "t0,d1", "--stage", "1", "-o", dir / "t.csv"});
  REQUIRE(t.code == 0);
  const auto diffed = read_curves_csv(dir / "t.csv");
  CHECK(diffed.m() == 29);
  CHECK(cli({"transform", data, "--steps", "t0,d1", "--stage", "5"}).code == 2);
}
