#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"

#include "alo/commands.hpp"
#include "alo/config.hpp"
#include "alo/error.hpp"
#include "alo/io.hpp"

using namespace alo;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("alo_cli_test_" + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Text table: header plus rows of cells.
struct Text {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t col(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return c;
    }
    FAIL("missing column " << name);
    return 0;
  }
  double num(std::size_t r, const std::string& name) const { return std::stod(rows[r][col(name)]); }
  bool has(const std::string& name) const {
    for (const auto& h : header) {
      if (h == name) return true;
    }
    return false;
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

Text parse_text(const std::string& text) {
  Text t;
  std::stringstream ss(text);
  std::string line;
  bool first = true;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    if (first) {
      t.header = split(line);
      first = false;
    } else {
      t.rows.push_back(split(line));
    }
  }
  return t;
}

Text read_text(const std::string& path) { return parse_text(slurp(path)); }

Dataset lasso_data(Index n, Index p, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  Dataset d;
  d.X = ref::gaussian(n, p, g);
  d.y = d.X * ref::sparse_signal(p, 3, g) + 0.5 * ref::gaussian_vec(n, g);
  return d;
}

int run(const std::string& cmd, const RunConfig& cfg, std::string* log_text = nullptr) {
  std::ostringstream out, log;
  const int rc = run_command(cmd, cfg, out, log);
  if (log_text) *log_text = log.str();
  return rc;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(ALO_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("csv round trip keeps every digit") {
  TempDir tmp;
  Eigen::MatrixXd m(2, 3);
  m << 0.1, 1.0 / 3.0, -2.5e-300, 1e300, std::acos(-1.0), 7.0;
  write_csv(tmp.file("m.csv"), {"a", "b", "c"}, m);
  const CsvTable t = read_csv(tmp.file("m.csv"));
  CHECK(t.header == std::vector<std::string>{"a", "b", "c"});
  CHECK(t.values == m);
  CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("malformed csv rows name the line") {
  TempDir tmp;
  std::ofstream(tmp.file("bad.csv")) << "x1,y\n1,2\n3\n";
  try {
    read_csv(tmp.file("bad.csv"));
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse_error);
    CHECK(std::string(e.what()).find("bad.csv:3") != std::string::npos);
  }
  std::ofstream(tmp.file("nan.csv")) << "x1,y\n1,abc\n";
  try {
    read_csv(tmp.file("nan.csv"));
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("nan.csv:2") != std::string::npos);
    CHECK(std::string(e.what()).find("column 2") != std::string::npos);
  }
  CHECK_THROWS_AS(read_csv(tmp.file("missing.csv")), Error);
}

TEST_CASE("datasets round trip, with the response inline or separate") {
  TempDir tmp;
  const Dataset d = lasso_data(6, 3, 1);
  write_dataset(tmp.file("d.csv"), d);
  const Dataset back = read_dataset(tmp.file("d.csv"));
  CHECK(back.X == d.X);
  CHECK(back.y == d.y);
  write_csv(tmp.file("x.csv"), {"x1", "x2", "x3"}, d.X);
  write_csv(tmp.file("y.csv"), {"y"}, d.y);
  const Dataset sep = read_dataset(tmp.file("x.csv"), tmp.file("y.csv"));
  CHECK(sep.X == d.X);
  CHECK(sep.y == d.y);

  MatrixDataset md;
  md.p1 = 2;
  md.p2 = 3;
  md.X = d.X.leftCols(3).replicate(1, 2);
  md.y = d.y;
  write_matrix_dataset(tmp.file("m.csv"), md);
  CHECK(fs::exists(shape_path(tmp.file("m.csv"))));
  const MatrixDataset mb = read_matrix_dataset(tmp.file("m.csv"));
  CHECK(mb.p1 == 2);
  CHECK(mb.p2 == 3);
  CHECK(mb.X == md.X);
}

TEST_CASE("config text round trips and rejects unknown keys") {
  RunConfig cfg;
  set_field(cfg, "lambda-count", "7");
  set_field(cfg, "route", "both");
  set_field(cfg, "oracle", "false");
  set_field(cfg, "in", "data.csv");
  const RunConfig back = parse_config_text(dump_config(cfg));
  CHECK(back.lambda_count == 7);
  CHECK(back.route == "both");
  CHECK_FALSE(back.oracle);
  CHECK(back.in == "data.csv");
  CHECK(dump_config(back) == dump_config(cfg));
  CHECK_THROWS_AS(set_field(cfg, "lambda_cnt", "3"), Error);
  CHECK_THROWS_AS(set_field(cfg, "lambda_count", "three"), Error);
  try {
    parse_config_text("# comment\nmodel = lasso\nbogus = 1\n", "run.cfg");
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("run.cfg:3") != std::string::npos);
  }
  for (const auto& key : config_keys()) CHECK(key.find('-') == std::string::npos);
}

TEST_CASE("fit writes one row per lambda and reruns byte for byte") {
  TempDir tmp;
  Eigen::MatrixXd x(2, 1);
  x << 1.0, 2.0;
  write_dataset(tmp.file("tiny.csv"), Dataset{x, Eigen::Vector2d(1.0, 3.0)});
  RunConfig cfg;
  cfg.in = tmp.file("tiny.csv");
  cfg.lambda_count = 5;
  cfg.out = tmp.file("fit1.csv");
  CHECK(run("fit", cfg) == kExitOk);
  cfg.out = tmp.file("fit2.csv");
  CHECK(run("fit", cfg) == kExitOk);
  const Text t = read_text(tmp.file("fit1.csv"));
  CHECK(t.rows.size() == 5);
  CHECK(t.has("beta_1"));
  CHECK(t.num(0, "beta_1") == 0.0);
  CHECK(slurp(tmp.file("fit1.csv")) == slurp(tmp.file("fit2.csv")));
}

TEST_CASE("a malformed input gives a usage exit naming the line") {
  TempDir tmp;
  std::ofstream(tmp.file("bad.csv")) << "x1,x2,y\n1,2,3\n4,5,6\n7,8\n";
  RunConfig cfg;
  cfg.in = tmp.file("bad.csv");
  std::string log;
  CHECK(run("fit", cfg, &log) == kExitUsage);
  CHECK(log.find("bad.csv:4") != std::string::npos);
  RunConfig none;
  CHECK(run("alo", none) == kExitUsage);
  CHECK(run("nonsense", none) == kExitUsage);
}

TEST_CASE("alo with both routes on the lasso") {
  TempDir tmp;
  const Dataset d = lasso_data(40, 60, 2);
  write_dataset(tmp.file("d.csv"), d);
  RunConfig cfg;
  cfg.in = tmp.file("d.csv");
  cfg.route = "both";
  cfg.lambda_count = 8;
  cfg.out = tmp.file("alo.csv");
  cfg.obs_out = tmp.file("obs.csv");
  CHECK(run("alo", cfg) == kExitOk);
  const Text t = read_text(cfg.out);
  REQUIRE(t.rows.size() == 8);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    CHECK(std::abs(t.num(r, "alo_risk_primal") - t.num(r, "alo_risk_dual")) < 1e-6);
  }
  // the first grid point is the null model: every prediction is zero
  CHECK(t.num(0, "alo_risk_primal") == doctest::Approx(d.y.squaredNorm() / 40.0).epsilon(1e-12));
  // degenerate counts agree with the per-observation flags
  const Text o = read_text(cfg.obs_out);
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    int flagged = 0;
    for (const auto& row : o.rows) {
      if (row[o.col("lambda")] == t.rows[r][0] && row[o.col("route")] == "primal" &&
          row[o.col("degenerate")] == "1") {
        ++flagged;
      }
    }
    CHECK(flagged == static_cast<int>(t.num(r, "n_degenerate_primal")));
  }
  CHECK(o.rows.size() == 2 * 8 * 40);
}

TEST_CASE("alo refuses a route the model does not have") {
  TempDir tmp;
  std::mt19937_64 g(3);
  Dataset d{ref::gaussian(20, 3, g), Eigen::VectorXd()};
  d.y = ref::labels_from(d.X.col(0), g);
  write_dataset(tmp.file("svm.csv"), d);
  RunConfig cfg;
  cfg.in = tmp.file("svm.csv");
  cfg.model = "svm";
  cfg.route = "dual";
  std::string log;
  CHECK(run("alo", cfg, &log) == kExitUsage);
  CHECK(log.find("route") != std::string::npos);
}

TEST_CASE("the default route falls back to the dual where there is no primal") {
  TempDir tmp;
  write_dataset(tmp.file("d.csv"), lasso_data(20, 6, 7));
  RunConfig cfg;
  cfg.in = tmp.file("d.csv");
  cfg.model = "fused";
  cfg.lambda_count = 3;
  cfg.out = tmp.file("alo.csv");
  CHECK(cfg.route == "auto");
  CHECK(run("alo", cfg) == kExitOk);
  const Text t = read_text(cfg.out);
  CHECK(t.rows.size() == 3);
  CHECK(t.rows[0][t.col("route")] == "dual");
  cfg.route = "primal";
  CHECK(run("alo", cfg) == kExitUsage);
}

TEST_CASE("compare on ridge is exact and adds k-fold only on request") {
  TempDir tmp;
  const Dataset d = lasso_data(30, 10, 4);
  write_dataset(tmp.file("d.csv"), d);
  RunConfig cfg;
  cfg.in = tmp.file("d.csv");
  cfg.model = "ridge";
  cfg.lambda_count = 6;
  cfg.out = tmp.file("cmp.csv");
  CHECK(run("compare", cfg) == kExitOk);
  Text t = read_text(cfg.out);
  CHECK_FALSE(t.has("kfold_risk"));
  for (std::size_t r = 0; r < t.rows.size(); ++r) CHECK(t.num(r, "rel_gap") < 1e-8);
  const std::string summary = slurp(cfg.out + ".summary");
  CHECK(summary.find("argmin_index_alo") != std::string::npos);
  CHECK(summary.find("mean_rel_gap_middle") != std::string::npos);

  cfg.kfold = 5;
  CHECK(run("compare", cfg) == kExitOk);
  t = read_text(cfg.out);
  CHECK(t.has("kfold_risk"));
  CHECK(t.rows.size() == 6);
}

TEST_CASE("bench honors the repeat count") {
  TempDir tmp;
  write_dataset(tmp.file("d.csv"), lasso_data(20, 10, 5));
  RunConfig cfg;
  cfg.in = tmp.file("d.csv");
  cfg.repeats = 4;
  cfg.lambda_count = 5;
  cfg.out = tmp.file("bench.csv");
  CHECK(run("bench", cfg) == kExitOk);
  const Text t = read_text(cfg.out);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[0][0] == "single_fit");
  for (std::size_t r = 0; r < 3; ++r) CHECK(t.num(r, "repeats") == 4.0);
  CHECK(t.num(0, "ratio_to_fit") == 1.0);
  cfg.oracle = false;
  CHECK(run("bench", cfg) == kExitOk);
  CHECK(read_text(cfg.out).rows.size() == 2);
}

TEST_CASE("datagen writes data and truth deterministically") {
  TempDir tmp;
  RunConfig cfg;
  cfg.scenario = "lowrank";
  cfg.n = 12;
  cfg.p1 = 3;
  cfg.p2 = 4;
  cfg.out = tmp.file("lr.csv");
  CHECK(run("datagen", cfg) == kExitOk);
  const MatrixDataset md = read_matrix_dataset(cfg.out);
  CHECK(md.n() == 12);
  CHECK(md.p2 == 4);
  CHECK(read_csv(cfg.out + ".truth.csv").values.rows() == 12);
  const std::string first = slurp(cfg.out);
  CHECK(run("datagen", cfg) == kExitOk);
  CHECK(slurp(cfg.out) == first);

  // the generated file feeds straight into the nuclear model
  RunConfig fit;
  fit.in = cfg.out;
  fit.model = "nuclear";
  fit.lambda_count = 3;
  fit.out = tmp.file("lr_alo.csv");
  CHECK(run("alo", fit) == kExitOk);
  CHECK(read_text(fit.out).rows.size() == 3);
}

TEST_CASE("the binary applies config, then flags, then --set") {
  TempDir tmp;
  write_dataset(tmp.file("d.csv"), lasso_data(15, 4, 6));
  std::ofstream(tmp.file("run.cfg")) << "# test run\nlambda_count = 4\nin = " << tmp.file("d.csv") << "\n";
  CHECK(run_binary("fit --config " + tmp.file("run.cfg") + " --out " + tmp.file("a.csv")) == 0);
  CHECK(read_text(tmp.file("a.csv")).rows.size() == 4);
  CHECK(run_binary("fit --config " + tmp.file("run.cfg") + " --lambda-count 6 --out " + tmp.file("b.csv")) == 0);
  CHECK(read_text(tmp.file("b.csv")).rows.size() == 6);
  CHECK(run_binary("fit --config " + tmp.file("run.cfg") + " --lambda-count 6 --set lambda_count=3 --out " +
                   tmp.file("c.csv")) == 0);
  CHECK(read_text(tmp.file("c.csv")).rows.size() == 3);
  CHECK(run_binary("fit --no-such-flag") == 2);
  CHECK(run_binary("fit --config " + tmp.file("missing.cfg")) == 2);
  CHECK(run_binary("--help") == 0);
}
