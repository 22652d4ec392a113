// alo: fit penalized regression paths and estimate their leave-one-out risk.
//
//   alo fit      --in data.csv --model lasso --out path.csv
//   alo alo      --in data.csv --route both --out risk.csv
//   alo compare  --in data.csv --kfold 5 --out cmp.csv
//   alo datagen  --scenario fused --n 100 --p 50 --out fused.csv

#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "alo/commands.hpp"
#include "alo/config.hpp"
#include "alo/error.hpp"

namespace {

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

// Flag -> config key. Every flag also exists as a config file key.
const std::vector<Flag> kFlags = {
    {"--model", "model", "lasso, ridge, logistic-ridge, logistic-l1, svm, fused, nuclear"},
    {"--loss", "loss", "override the model's loss: squared, logistic, hinge"},
    {"--reg", "reg", "override the model's regularizer: l1, ridge, generalized-l1, nuclear"},
    {"--d-matrix", "d_matrix", "CSV with the generalized-l1 matrix D (default: first differences)"},
    {"--lambda-min", "lambda_min", "smallest lambda (default lambda-max * lambda-ratio)"},
    {"--lambda-max", "lambda_max", "largest lambda (default derived from the data)"},
    {"--lambda-ratio", "lambda_ratio", "lambda-min / lambda-max when lambda-min is unset"},
    {"--lambda-count", "lambda_count", "number of log-spaced grid points"},
    {"--route", "route", "ALO route: auto, primal, dual or both"},
    {"--d", "d", "error function: squared or zero-one"},
    {"--oracle", "oracle", "run exact leave-one-out in compare/bench (true/false)"},
    {"--kfold", "kfold", "compare: add a k-fold CV column"},
    {"--repeats", "repeats", "bench: number of timed repeats"},
    {"--max-refits", "max_refits", "refuse exact LOOCV above this many refits"},
    {"--seed", "seed", "seed for data generation, folds and solver order"},
    {"--threads", "threads", "worker threads"},
    {"--in", "in", "input CSV (response in the last column unless --y-in)"},
    {"--y-in", "y_in", "separate response CSV"},
    {"--out", "out", "output CSV (stdout if omitted)"},
    {"--obs-out", "obs_out", "alo: per-observation predictions CSV"},
    {"--kkt-tol", "kkt_tol", "solver optimality tolerance"},
    {"--scenario", "scenario", "datagen: svm, fused, lowrank, lasso-misspec, lasso-heavytail, lasso-correlated, lasso-timing"},
    {"--n", "n", "datagen: observations"},
    {"--p", "p", "datagen: features"},
    {"--p1", "p1", "datagen: matrix rows"},
    {"--p2", "p2", "datagen: matrix columns"},
    {"--rank", "rank", "datagen: rank of the true matrix"},
    {"--k", "k", "datagen: sparsity or number of jumps"},
    {"--rho", "rho", "datagen: correlation"},
    {"--noise-var", "noise_var", "datagen: noise variance (negative: scenario default)"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate leave-one-out risk for penalized regression"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::map<std::string, std::string> given;

  const std::vector<std::pair<const char*, const char*>> commands = {
      {"fit", "fit the lambda path and write coefficients"},
      {"alo", "ALO risk curve"},
      {"loocv", "exact leave-one-out risk curve"},
      {"compare", "ALO next to exact LOOCV and optional k-fold"},
      {"bench", "time one path fit, ALO and LOOCV"},
      {"datagen", "write a synthetic dataset"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value config file; flags override it");
    sub->add_option("--set", overrides, "extra key=value override (repeatable)");
    for (const Flag& f : kFlags) {
      const std::string key = f.key;
      sub->add_option_function<std::string>(
          f.name, [&given, key](const std::string& v) { given[key] = v; }, f.help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : alo::kExitUsage;
  }

  alo::RunConfig cfg;
  try {
    if (!config_path.empty()) alo::load_config(cfg, config_path);
    for (const auto& [key, value] : given) alo::set_field(cfg, key, value);
    for (const std::string& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw alo::Error(alo::ErrorKind::parse_error, "--set expects key=value, got '" + kv + "'");
      }
      alo::set_field(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
  } catch (const alo::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return alo::kExitUsage;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  return alo::run_command(name, cfg, std::cout, std::cerr);
}
