#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "alo/config.hpp"
#include "alo/risk.hpp"
#include "alo/solvers.hpp"

namespace alo {

inline constexpr int kExitOk = 0;
inline constexpr int kExitPartial = 1;  // some lambda or observation failed
inline constexpr int kExitUsage = 2;    // bad flags, config or input files

/// Data and model resolved from a config: loss/regularizer from the preset
/// (overridden by loss/reg), D for generalized-l1, and the lambda grid.
struct Problem {
  ModelSpec model;
  bool is_matrix = false;
  Dataset data;
  MatrixDataset mdata;
  ErrorFn error_fn = ErrorFn::squared;

  Index n() const { return is_matrix ? mdata.n() : data.n(); }
  const Eigen::VectorXd& y() const { return is_matrix ? mdata.y : data.y; }
};

/// Loss and regularizer named by the config, without data.
ModelSpec model_from_config(const RunConfig& cfg);
Problem load_problem(const RunConfig& cfg);

/// Smallest lambda at which the fit is the null model, where one exists
/// (l1, generalized-l1, nuclear); a scale-matched heuristic otherwise.
double auto_lambda_max(const ModelSpec& model, const Dataset& data);
double auto_lambda_max(const MatrixDataset& data);

std::vector<Route> routes_from_config(const RunConfig& cfg, const ModelSpec& model);

/// Each command writes its table to cfg.out (stdout when empty), notes to
/// `log` and returns an exit code. Failures at individual lambdas are
/// listed on `log`.
int cmd_fit(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_alo(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_loocv(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& log);
int cmd_datagen(const RunConfig& cfg, std::ostream& out, std::ostream& log);

/// Dispatch by name; library errors become exit codes with a message on `log`.
int run_command(const std::string& name, const RunConfig& cfg, std::ostream& out,
                std::ostream& log);

}  // namespace alo
