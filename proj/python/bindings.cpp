#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "alo/commands.hpp"
#include "alo/datagen.hpp"
#include "alo/error.hpp"
#include "alo/oracle.hpp"
#include "alo/risk.hpp"

namespace py = pybind11;

namespace {

struct Model {
  alo::ModelSpec spec;
  bool matrix = false;
  alo::Index p1 = 0;
  alo::Index p2 = 0;
};

Model make_model(const std::string& model, const std::vector<double>& lambdas,
                 const std::string& loss, const std::string& reg,
                 const std::optional<Eigen::MatrixXd>& d, alo::Index p, alo::Index p1,
                 alo::Index p2) {
  alo::RunConfig cfg;
  cfg.model = model;
  cfg.loss = loss;
  cfg.reg = reg;
  Model m;
  m.spec = alo::model_from_config(cfg);
  m.spec.lambdas = lambdas;
  if (m.spec.reg == alo::RegKind::generalized_l1) {
    m.spec.D = d ? *d : alo::fused_difference_matrix(p);
  }
  if (m.spec.reg == alo::RegKind::nuclear) {
    if (p1 <= 0 || p2 <= 0 || p1 * p2 != p) {
      throw alo::Error(alo::ErrorKind::invalid_argument, "nuclear models need p1 * p2 == X.shape[1]");
    }
    m.matrix = true;
    m.p1 = p1;
    m.p2 = p2;
  }
  m.spec.validate();
  return m;
}

py::dict path_dict(const alo::PathFit& path) {
  const auto g = static_cast<alo::Index>(path.fits.size());
  const alo::Index dim = g ? path.fits.front().beta.size() : 0;
  Eigen::MatrixXd beta(g, dim);
  std::vector<bool> conv;
  std::vector<double> obj;
  for (alo::Index k = 0; k < g; ++k) {
    beta.row(k) = path.fits[static_cast<std::size_t>(k)].beta.transpose();
    conv.push_back(path.fits[static_cast<std::size_t>(k)].converged);
    obj.push_back(path.fits[static_cast<std::size_t>(k)].objective);
  }
  py::dict out;
  out["lambdas"] = path.lambdas;
  out["beta"] = beta;
  out["converged"] = conv;
  out["objective"] = obj;
  return out;
}

alo::PathFit run_path(const Model& m, const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  if (m.matrix) return alo::fit_path(m.spec, alo::MatrixDataset{x, y, m.p1, m.p2});
  return alo::fit_path(m.spec, alo::Dataset{x, y});
}

py::dict predictions_dict(const std::vector<double>& lambdas, const std::vector<double>& risk,
                          const std::vector<alo::Predictions>& preds) {
  const auto g = static_cast<alo::Index>(preds.size());
  const alo::Index n = g ? static_cast<alo::Index>(preds.front().size()) : 0;
  Eigen::MatrixXd yloo = Eigen::MatrixXd::Constant(g, n, std::numeric_limits<double>::quiet_NaN());
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> degen(g, n);
  degen.setZero();
  for (alo::Index k = 0; k < g; ++k) {
    for (const auto& p : preds[static_cast<std::size_t>(k)]) {
      yloo(k, p.index) = p.y_loo;
      degen(k, p.index) = p.degenerate;
    }
  }
  py::dict out;
  out["lambdas"] = lambdas;
  out["risk"] = risk;
  out["y_loo"] = yloo;
  out["degenerate"] = degen;
  return out;
}

}  // namespace

PYBIND11_MODULE(_alo, m) {
  m.doc() = "Approximate leave-one-out risk for penalized regression";

  static py::exception<alo::Error> error(m, "AloError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const alo::Error& e) {
      py::set_error(error, e.what());
    }
  });

  m.def("log_grid", &alo::log_grid, py::arg("lambda_max"), py::arg("lambda_min"), py::arg("count"));

  m.def(
      "fit_path",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<double>& lambdas,
         const std::string& model, const std::string& loss, const std::string& reg,
         const std::optional<Eigen::MatrixXd>& d, alo::Index p1, alo::Index p2) {
        const Model mm = make_model(model, lambdas, loss, reg, d, x.cols(), p1, p2);
        py::gil_scoped_release release;
        alo::PathFit path = run_path(mm, x, y);
        py::gil_scoped_acquire acquire;
        return path_dict(path);
      },
      py::arg("X"), py::arg("y"), py::arg("lambdas"), py::arg("model") = "lasso",
      py::arg("loss") = "", py::arg("reg") = "", py::arg("D") = py::none(), py::arg("p1") = 0,
      py::arg("p2") = 0);

  m.def(
      "alo_risk",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<double>& lambdas,
         const std::string& model, const std::string& route, const std::string& error_fn,
         const std::string& loss, const std::string& reg, const std::optional<Eigen::MatrixXd>& d,
         alo::Index p1, alo::Index p2, int threads) {
        const Model mm = make_model(model, lambdas, loss, reg, d, x.cols(), p1, p2);
        const alo::Route r = route == "auto" ? (alo::route_available(mm.spec, alo::Route::primal) ? alo::Route::primal
                                                                                                 : alo::Route::dual)
                                              : alo::parse_route(route);
        const alo::ErrorFn fn =
            error_fn.empty() ? alo::default_error_fn(mm.spec.loss) : alo::parse_error_fn(error_fn);
        alo::RiskCurve c;
        {
          py::gil_scoped_release release;
          const alo::PathFit path = run_path(mm, x, y);
          c = mm.matrix ? alo::alo_curve(mm.spec, alo::MatrixDataset{x, y, mm.p1, mm.p2}, path, r, fn, threads)
                        : alo::alo_curve(mm.spec, alo::Dataset{x, y}, path, r, fn, threads);
        }
        py::dict out = predictions_dict(c.lambdas, c.alo_risk, c.predictions);
        out["n_degenerate"] = c.n_degenerate;
        out["failures"] = c.failures;
        return out;
      },
      py::arg("X"), py::arg("y"), py::arg("lambdas"), py::arg("model") = "lasso",
      py::arg("route") = "auto", py::arg("error") = "", py::arg("loss") = "", py::arg("reg") = "",
      py::arg("D") = py::none(), py::arg("p1") = 0, py::arg("p2") = 0, py::arg("threads") = 1);

  m.def(
      "loocv_risk",
      [](const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const std::vector<double>& lambdas,
         const std::string& model, const std::string& error_fn, const std::string& loss,
         const std::string& reg, const std::optional<Eigen::MatrixXd>& d, alo::Index p1,
         alo::Index p2, int threads) {
        const Model mm = make_model(model, lambdas, loss, reg, d, x.cols(), p1, p2);
        alo::OracleOptions o;
        o.error_fn =
            error_fn.empty() ? alo::default_error_fn(mm.spec.loss) : alo::parse_error_fn(error_fn);
        o.threads = threads;
        alo::OracleCurve c;
        {
          py::gil_scoped_release release;
          c = mm.matrix ? alo::exact_loocv(mm.spec, alo::MatrixDataset{x, y, mm.p1, mm.p2}, o)
                        : alo::exact_loocv(mm.spec, alo::Dataset{x, y}, o);
        }
        py::dict out = predictions_dict(c.lambdas, c.loocv_risk, c.predictions);
        out["n_failed"] = c.n_failed;
        return out;
      },
      py::arg("X"), py::arg("y"), py::arg("lambdas"), py::arg("model") = "lasso",
      py::arg("error") = "", py::arg("loss") = "", py::arg("reg") = "", py::arg("D") = py::none(),
      py::arg("p1") = 0, py::arg("p2") = 0, py::arg("threads") = 1);

  m.def(
      "generate",
      [](const std::string& scenario, alo::Index n, alo::Index p, alo::Index p1, alo::Index p2,
         alo::Index rank, alo::Index k, double rho, double noise_var, std::uint64_t seed) {
        alo::GenSpec s;
        s.scenario = alo::parse_scenario(scenario);
        s.n = n;
        s.p = p;
        s.p1 = p1;
        s.p2 = p2;
        s.rank = rank;
        s.k = k;
        s.rho = rho;
        s.noise_var = noise_var;
        s.seed = seed;
        const alo::Generated g = alo::generate(s);
        if (g.is_matrix) return py::make_tuple(g.mdata.X, g.mdata.y, g.beta);
        return py::make_tuple(g.data.X, g.data.y, g.beta);
      },
      py::arg("scenario"), py::arg("n") = 100, py::arg("p") = 50, py::arg("p1") = 20,
      py::arg("p2") = 20, py::arg("rank") = 1, py::arg("k") = 5, py::arg("rho") = 0.8,
      py::arg("noise_var") = -1.0, py::arg("seed") = 1);
}
