#include "alo/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>

#include "alo/datagen.hpp"
#include "alo/error.hpp"
#include "alo/io.hpp"
#include "alo/oracle.hpp"

namespace alo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// The grid starts this far above the smallest null-fit lambda so that no
// coordinate sits exactly on the boundary of the dual feasible set.
constexpr double kNullMargin = 1e-6;

using Row = std::vector<std::string>;

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;
};

void emit(const Table& t, const std::string& path, std::ostream& out) {
  if (!path.empty()) {
    write_table(path, t.header, t.rows);
    return;
  }
  auto line = [&out](const Row& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) out << (c ? "," : "") << cells[c];
    out << '\n';
  };
  line(t.header);
  for (const Row& r : t.rows) line(r);
}

std::string num(double v) { return format_double(v); }
std::string num(Index v) { return std::to_string(v); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
double timed(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return seconds_since(t0);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::invalid_argument, what);
}

PathFit fit_problem(const Problem& pb) {
  return pb.is_matrix ? fit_path(pb.model, pb.mdata) : fit_path(pb.model, pb.data);
}

RiskCurve curve_for(const Problem& pb, const PathFit& path, Route route, int threads) {
  return pb.is_matrix ? alo_curve(pb.model, pb.mdata, path, route, pb.error_fn, threads)
                      : alo_curve(pb.model, pb.data, path, route, pb.error_fn, threads);
}

OracleCurve oracle_for(const Problem& pb, const RunConfig& cfg, const PathFit* path) {
  OracleOptions o;
  o.error_fn = pb.error_fn;
  o.threads = cfg.threads;
  o.max_refits = static_cast<std::size_t>(cfg.max_refits);
  return pb.is_matrix ? exact_loocv(pb.model, pb.mdata, o, path)
                      : exact_loocv(pb.model, pb.data, o, path);
}

int report_unconverged(const PathFit& path, std::ostream& log) {
  int bad = 0;
  for (const FitResult& f : path.fits) {
    if (f.converged) continue;
    log << "lambda=" << num(f.lambda) << ": solver did not converge (kkt residual "
        << num(f.kkt_residual) << " after " << f.iterations << " iterations)\n";
    ++bad;
  }
  return bad;
}

int report_failures(const RiskCurve& c, std::ostream& log) {
  int bad = 0;
  for (std::size_t k = 0; k < c.lambdas.size(); ++k) {
    if (c.failures[k].empty()) continue;
    log << "lambda=" << num(c.lambdas[k]) << " (" << to_string(c.route) << "): " << c.failures[k] << '\n';
    ++bad;
  }
  return bad;
}

Route preferred_route(const Problem& pb, const RunConfig& cfg) {
  const auto routes = routes_from_config(cfg, pb.model);
  for (Route r : routes) {
    if (route_available(pb.model, r)) return r;
  }
  throw Error(ErrorKind::unsupported, "no ALO route available for model " + pb.model.name());
}

std::size_t argmin(const std::vector<double>& v) {
  std::size_t best = v.size();
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (std::isnan(v[k])) continue;
    if (best == v.size() || v[k] < v[best]) best = k;
  }
  return best;
}

double null_margin(double v) { return v * (1.0 + kNullMargin); }

double spectral_norm(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

}  // namespace

ModelSpec model_from_config(const RunConfig& cfg) {
  ModelSpec m;
  const std::string& name = cfg.model;
  if (name == "lasso") {
    m.loss = LossKind::squared;
    m.reg = RegKind::l1;
  } else if (name == "ridge") {
    m.loss = LossKind::squared;
    m.reg = RegKind::ridge;
  } else if (name == "logistic-ridge") {
    m.loss = LossKind::logistic;
    m.reg = RegKind::ridge;
  } else if (name == "logistic-l1" || name == "logistic-lasso") {
    m.loss = LossKind::logistic;
    m.reg = RegKind::l1;
  } else if (name == "svm") {
    m.loss = LossKind::hinge;
    m.reg = RegKind::ridge;
  } else if (name == "fused" || name == "genlasso") {
    m.loss = LossKind::squared;
    m.reg = RegKind::generalized_l1;
  } else if (name == "nuclear") {
    m.loss = LossKind::squared;
    m.reg = RegKind::nuclear;
  } else {
    throw Error(ErrorKind::invalid_argument, "unknown model '" + name + "'");
  }
  if (!cfg.loss.empty()) m.loss = parse_loss(cfg.loss);
  if (!cfg.reg.empty()) m.reg = parse_regularizer(cfg.reg);
  m.solver.kkt_tol = cfg.kkt_tol;
  m.solver.zero_tol = cfg.zero_tol;
  m.solver.margin_tol = cfg.margin_tol;
  m.solver.rank_tol = cfg.rank_tol;
  m.solver.seed = cfg.seed;
  return m;
}

double auto_lambda_max(const ModelSpec& model, const Dataset& data) {
  const Eigen::VectorXd xty = data.X.transpose() * data.y;
  double v = 0.0;
  switch (model.reg) {
    case RegKind::l1:
      v = xty.cwiseAbs().maxCoeff();
      if (model.loss == LossKind::logistic) v *= 0.5;  // -loss'(0; y) = y / 2
      v = null_margin(v);
      break;
    case RegKind::generalized_l1: {
      // Null fit: least squares over null(D); lambda_max = ||u||_inf for the
      // least-norm u with D^T u = X^T r.
      Eigen::JacobiSVD<Eigen::MatrixXd> dsvd(model.D, Eigen::ComputeFullV);
      const Index rk = dsvd.rank();
      const Eigen::MatrixXd null_basis = dsvd.matrixV().rightCols(model.D.cols() - rk);
      Eigen::VectorXd r = data.y;
      if (null_basis.cols() > 0) {
        const Eigen::MatrixXd xn = data.X * null_basis;
        r -= xn * xn.completeOrthogonalDecomposition().solve(data.y);
      }
      const Eigen::VectorXd g = data.X.transpose() * r;
      const Eigen::VectorXd u = model.D.transpose().completeOrthogonalDecomposition().solve(g);
      v = null_margin(u.cwiseAbs().maxCoeff());
      break;
    }
    case RegKind::ridge:
      // No null fit; start where the penalty dominates X^T X.
      v = data.X.squaredNorm();
      break;
    case RegKind::nuclear:
      throw Error(ErrorKind::invalid_argument, "nuclear models take matrix data");
  }
  return std::isfinite(v) && v > 0.0 ? v : 1.0;
}

double auto_lambda_max(const MatrixDataset& data) {
  const Eigen::VectorXd g = data.X.transpose() * data.y;
  const double v = null_margin(spectral_norm(unflatten(g, data.p1, data.p2)));
  return std::isfinite(v) && v > 0.0 ? v : 1.0;
}

Problem load_problem(const RunConfig& cfg) {
  require(!cfg.in.empty(), "an input file is required (--in)");
  require(cfg.lambda_count >= 1, "lambda_count must be at least 1");
  require(cfg.lambda_ratio > 0.0 && cfg.lambda_ratio < 1.0, "lambda_ratio must lie in (0, 1)");
  require(cfg.threads >= 1, "threads must be at least 1");
  Problem pb;
  pb.model = model_from_config(cfg);
  if (pb.model.reg == RegKind::nuclear) {
    pb.is_matrix = true;
    pb.mdata = read_matrix_dataset(cfg.in, cfg.y_in);
  } else {
    pb.data = read_dataset(cfg.in, cfg.y_in);
    pb.data.validate(requires_binary_labels(pb.model.loss));
    if (pb.model.reg == RegKind::generalized_l1) {
      if (cfg.d_matrix.empty()) {
        require(pb.data.p() >= 2, "first-difference penalty needs at least two features");
        pb.model.D = fused_difference_matrix(pb.data.p());
      } else {
        pb.model.D = read_csv(cfg.d_matrix).values;
        require(pb.model.D.cols() == pb.data.p(),
                cfg.d_matrix + ": D has " + std::to_string(pb.model.D.cols()) + " columns, data has " +
                    std::to_string(pb.data.p()) + " features");
      }
    }
  }
  const double lmax =
      cfg.lambda_max > 0.0
          ? cfg.lambda_max
          : (pb.is_matrix ? auto_lambda_max(pb.mdata) : auto_lambda_max(pb.model, pb.data));
  const double lmin = cfg.lambda_min > 0.0 ? cfg.lambda_min : lmax * cfg.lambda_ratio;
  pb.model.lambdas = log_grid(lmax, lmin, cfg.lambda_count);
  pb.model.validate();
  pb.error_fn = cfg.error_fn.empty() ? default_error_fn(pb.model.loss) : parse_error_fn(cfg.error_fn);
  return pb;
}

std::vector<Route> routes_from_config(const RunConfig& cfg, const ModelSpec& model) {
  if (cfg.route == "both") return {Route::primal, Route::dual};
  if (cfg.route == "auto") return {route_available(model, Route::primal) ? Route::primal : Route::dual};
  return {parse_route(cfg.route)};
}

int cmd_fit(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const Problem pb = load_problem(cfg);
  const PathFit path = fit_problem(pb);
  Table t;
  t.header = {"lambda", "objective", "kkt_residual", "converged", "iterations", "active_size"};
  const Index dim = path.fits.empty() ? 0 : path.fits.front().beta.size();
  for (Index l = 0; l < dim; ++l) t.header.push_back("beta_" + std::to_string(l + 1));
  for (const FitResult& f : path.fits) {
    Row r = {num(f.lambda), num(f.objective), num(f.kkt_residual), f.converged ? "1" : "0",
             std::to_string(f.iterations), num(static_cast<Index>(f.active_set.size()))};
    for (Index l = 0; l < dim; ++l) r.push_back(num(f.beta(l)));
    t.rows.push_back(std::move(r));
  }
  emit(t, cfg.out, out);
  return report_unconverged(path, log) ? kExitPartial : kExitOk;
}

int cmd_alo(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const Problem pb = load_problem(cfg);
  const auto routes = routes_from_config(cfg, pb.model);
  for (Route r : routes) {
    if (!route_available(pb.model, r)) {
      throw Error(ErrorKind::unsupported, std::string("route ") + std::string(to_string(r)) +
                                              " is not available for model " + pb.model.name());
    }
  }
  const PathFit path = fit_problem(pb);
  std::vector<RiskCurve> curves;
  for (Route r : routes) curves.push_back(curve_for(pb, path, r, cfg.threads));

  Table t;
  const bool both = curves.size() > 1;
  if (both) {
    t.header = {"lambda", "alo_risk_primal", "alo_risk_dual", "n_degenerate_primal",
                "n_degenerate_dual", "route"};
  } else {
    t.header = {"lambda", "alo_risk", "n_degenerate", "route"};
  }
  for (std::size_t k = 0; k < path.lambdas.size(); ++k) {
    Row r = {num(path.lambdas[k])};
    for (const auto& c : curves) r.push_back(num(c.alo_risk[k]));
    for (const auto& c : curves) r.push_back(num(c.n_degenerate[k]));
    r.emplace_back(both ? "both" : std::string(to_string(curves.front().route)));
    t.rows.push_back(std::move(r));
  }
  emit(t, cfg.out, out);

  if (!cfg.obs_out.empty()) {
    Table o;
    o.header = {"lambda", "index", "y", "y_loo", "degenerate", "route"};
    for (const auto& c : curves) {
      for (std::size_t k = 0; k < c.lambdas.size(); ++k) {
        for (const ObsPrediction& p : c.predictions[k]) {
          o.rows.push_back({num(c.lambdas[k]), num(p.index), num(pb.y()(p.index)),
                            num(p.degenerate ? kNaN : p.y_loo), p.degenerate ? "1" : "0",
                            std::string(to_string(c.route))});
        }
      }
    }
    write_table(cfg.obs_out, o.header, o.rows);
  }
  int bad = report_unconverged(path, log);
  for (const auto& c : curves) bad += report_failures(c, log);
  return bad ? kExitPartial : kExitOk;
}

int cmd_loocv(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const Problem pb = load_problem(cfg);
  const PathFit path = fit_problem(pb);
  const OracleCurve oc = oracle_for(pb, cfg, &path);
  Table t;
  t.header = {"lambda", "loocv_risk", "n_failed"};
  int bad = 0;
  for (std::size_t k = 0; k < oc.lambdas.size(); ++k) {
    t.rows.push_back({num(oc.lambdas[k]), num(oc.loocv_risk[k]), num(oc.n_failed[k])});
    if (oc.n_failed[k] == 0) continue;
    ++bad;
    log << "lambda=" << num(oc.lambdas[k]) << ": refits failed for observations";
    for (const ObsPrediction& p : oc.predictions[k]) {
      if (p.degenerate) log << ' ' << p.index;
    }
    log << '\n';
  }
  emit(t, cfg.out, out);
  return bad ? kExitPartial : kExitOk;
}

int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const Problem pb = load_problem(cfg);
  require(cfg.kfold == 0 || cfg.kfold >= 2, "kfold must be 0 or at least 2");
  require(cfg.kfold == 0 || !pb.is_matrix, "k-fold CV is available for vector data only");
  const PathFit path = fit_problem(pb);
  const Route route = preferred_route(pb, cfg);
  const RiskCurve alo = curve_for(pb, path, route, cfg.threads);
  const std::size_t g = path.lambdas.size();

  std::vector<double> loo(g, kNaN);
  std::vector<double> gap(g, kNaN);
  int bad = report_unconverged(path, log) + report_failures(alo, log);
  if (cfg.oracle) {
    const OracleCurve oc = oracle_for(pb, cfg, &path);
    for (std::size_t k = 0; k < g; ++k) {
      // Observations degenerate under ALO are dropped from both averages.
      std::vector<char> skip(static_cast<std::size_t>(pb.n()), 0);
      for (const ObsPrediction& p : alo.predictions[k]) {
        if (p.degenerate) skip[static_cast<std::size_t>(p.index)] = 1;
      }
      loo[k] = average_risk(oc.predictions[k], pb.y(), pb.error_fn, nullptr, &skip);
      gap[k] = std::abs(alo.alo_risk[k] - loo[k]) / std::max(loo[k], 1e-300);
      if (oc.n_failed[k] > 0) {
        log << "lambda=" << num(oc.lambdas[k]) << ": " << oc.n_failed[k] << " refits failed\n";
        ++bad;
      }
    }
  }
  std::vector<double> kf;
  if (cfg.kfold > 0) kf = kfold_cv(pb.model, pb.data, cfg.kfold, cfg.seed, pb.error_fn, cfg.threads);

  Table t;
  t.header = {"lambda", "alo_risk"};
  if (cfg.oracle) {
    t.header.emplace_back("loocv_risk");
    t.header.emplace_back("rel_gap");
  }
  if (cfg.kfold > 0) t.header.push_back("kfold_risk");
  t.header.emplace_back("n_degenerate");
  for (std::size_t k = 0; k < g; ++k) {
    Row r = {num(path.lambdas[k]), num(alo.alo_risk[k])};
    if (cfg.oracle) {
      r.push_back(num(loo[k]));
      r.push_back(num(gap[k]));
    }
    if (cfg.kfold > 0) r.push_back(num(kf[k]));
    r.push_back(num(alo.n_degenerate[k]));
    t.rows.push_back(std::move(r));
  }
  emit(t, cfg.out, out);

  std::ostringstream summary;
  auto argmin_line = [&](const char* name, const std::vector<double>& v) {
    const std::size_t a = argmin(v);
    summary << "argmin_lambda_" << name << " = " << (a < g ? num(path.lambdas[a]) : "nan") << '\n';
    summary << "argmin_index_" << name << " = " << (a < g ? std::to_string(a) : "-1") << '\n';
  };
  summary << "route = " << to_string(route) << '\n';
  argmin_line("alo", alo.alo_risk);
  if (cfg.oracle) {
    argmin_line("loocv", loo);
    // The middle half of the grid avoids the null-model end and the
    // smallest lambdas, where the approximation is known to degrade.
    const std::size_t lo = g / 4;
    const std::size_t hi = std::max(lo + 1, g - g / 4);
    double sum = 0.0;
    double worst = 0.0;
    std::size_t cnt = 0;
    for (std::size_t k = lo; k < hi && k < g; ++k) {
      if (std::isnan(gap[k])) continue;
      sum += gap[k];
      worst = std::max(worst, gap[k]);
      ++cnt;
    }
    double all_worst = 0.0;
    for (double v : gap) {
      if (!std::isnan(v)) all_worst = std::max(all_worst, v);
    }
    summary << "mean_rel_gap_middle = " << (cnt ? num(sum / static_cast<double>(cnt)) : "nan") << '\n';
    summary << "max_rel_gap_middle = " << num(worst) << '\n';
    summary << "max_rel_gap = " << num(all_worst) << '\n';
  }
  if (cfg.kfold > 0) argmin_line("kfold", kf);
  log << summary.str();
  if (!cfg.out.empty()) {
    std::ofstream os(cfg.out + ".summary");
    if (!os) throw Error(ErrorKind::io_error, "cannot write '" + cfg.out + ".summary'");
    os << summary.str();
  }
  return bad ? kExitPartial : kExitOk;
}

int cmd_bench(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  require(cfg.repeats >= 1, "repeats must be at least 1");
  const Problem pb = load_problem(cfg);
  const Route route = preferred_route(pb, cfg);
  std::vector<double> t_fit;
  std::vector<double> t_alo;
  std::vector<double> t_loo;
  int bad = 0;
  for (int rep = 0; rep < cfg.repeats; ++rep) {
    PathFit path;
    const double fit_s = timed([&] { path = fit_problem(pb); });
    RiskCurve c;
    const double alo_s = timed([&] { c = curve_for(pb, path, route, cfg.threads); });
    t_fit.push_back(fit_s);
    // ALO needs the fit, so its total includes it.
    t_alo.push_back(fit_s + alo_s);
    if (rep == 0) bad += report_unconverged(path, log) + report_failures(c, log);
    if (cfg.oracle) {
      OracleCurve oc;
      const double loo_s = timed([&] { oc = oracle_for(pb, cfg, &path); });
      t_loo.push_back(fit_s + loo_s);
    }
  }
  auto stats = [](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair{mean, sd};
  };
  const double fit_mean = stats(t_fit).first;
  Table t;
  t.header = {"measure", "mean_seconds", "sd_seconds", "repeats", "ratio_to_fit"};
  auto add = [&](const char* name, const std::vector<double>& v) {
    const auto [m, s] = stats(v);
    t.rows.push_back({name, num(m), num(s), std::to_string(v.size()), num(m / fit_mean)});
  };
  add("single_fit", t_fit);
  add("alo", t_alo);
  if (cfg.oracle) add("loocv", t_loo);
  emit(t, cfg.out, out);
  return bad ? kExitPartial : kExitOk;
}

int cmd_datagen(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  require(!cfg.out.empty(), "datagen needs an output path (--out)");
  const GenSpec spec = gen_spec(cfg);
  const Generated g = generate(spec);
  if (g.is_matrix) {
    write_matrix_dataset(cfg.out, g.mdata);
  } else {
    write_dataset(cfg.out, g.data);
  }
  Eigen::MatrixXd truth(g.beta.size(), 1);
  truth.col(0) = g.beta;
  write_csv(cfg.out + ".truth.csv", {"beta"}, truth);
  (void)out;
  log << "wrote " << (g.is_matrix ? g.mdata.n() : g.data.n()) << " observations ("
      << to_string(spec.scenario) << ") to " << cfg.out << '\n';
  return kExitOk;
}

int run_command(const std::string& name, const RunConfig& cfg, std::ostream& out,
                std::ostream& log) {
  try {
    if (name == "fit") return cmd_fit(cfg, out, log);
    if (name == "alo") return cmd_alo(cfg, out, log);
    if (name == "loocv") return cmd_loocv(cfg, out, log);
    if (name == "compare") return cmd_compare(cfg, out, log);
    if (name == "bench") return cmd_bench(cfg, out, log);
    if (name == "datagen") return cmd_datagen(cfg, out, log);
    log << "error: unknown command '" << name << "'\n";
    return kExitUsage;
  } catch (const Error& e) {
    log << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::parse_error:
      case ErrorKind::io_error:
      case ErrorKind::invalid_argument:
      case ErrorKind::unsupported:
      case ErrorKind::budget_exceeded:
        return kExitUsage;
      default:
        return kExitPartial;
    }
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitPartial;
  }
}

}  // namespace alo
