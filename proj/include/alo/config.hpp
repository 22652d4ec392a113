#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "alo/datagen.hpp"
#include "alo/solvers.hpp"

namespace alo {

/// Everything a CLI run needs. Only the data paths lack defaults.
/// Text form: one `key = value` per line, `#` starts a comment.
struct RunConfig {
  // model: lasso, ridge, logistic-ridge, logistic-l1, svm, fused, nuclear.
  // loss / reg, when set, override the preset.
  std::string model = "lasso";
  std::string loss;
  std::string reg;
  std::string d_matrix;  // CSV for generalized-l1; first differences if empty

  // Grid: lambda_max <= 0 means derived from the data (the smallest lambda
  // giving the null fit where one exists); lambda_min <= 0 means
  // lambda_max * lambda_ratio.
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  double lambda_ratio = 1e-2;
  int lambda_count = 20;

  std::string route = "auto";  // auto (primal where available), primal, dual, both
  std::string error_fn;          // squared, zero-one; empty picks by loss
  bool oracle = true;            // bench / compare: run exact leave-one-out
  int kfold = 0;                 // compare: extra k-fold column when > 0
  std::uint64_t seed = 1;
  int threads = 1;
  int repeats = 3;
  std::uint64_t max_refits = 2000000;

  double kkt_tol = 1e-7;
  double zero_tol = 1e-8;
  double margin_tol = 1e-5;
  double rank_tol = 1e-3;

  std::string in;
  std::string y_in;
  std::string out;
  std::string obs_out;  // alo: optional per-observation file

  // datagen
  std::string scenario = "lasso-misspec";
  Index n = 100;
  Index p = 50;
  Index p1 = 20;
  Index p2 = 20;
  Index rank = 1;
  Index k = 5;
  double rho = 0.8;
  double noise_var = -1.0;
};

/// Sets one field from text. Throws Error{parse_error} for an unknown key or
/// a value that does not parse.
void set_field(RunConfig& cfg, std::string_view key, std::string_view value);

/// Applies every `key = value` line of the file; errors cite the line.
void load_config(RunConfig& cfg, const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& source = "<text>");

/// Round-trippable text form.
std::string dump_config(const RunConfig& cfg);

std::vector<std::string> config_keys();

GenSpec gen_spec(const RunConfig& cfg);

}  // namespace alo
