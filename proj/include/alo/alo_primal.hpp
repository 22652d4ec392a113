#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "alo/model_core.hpp"
#include "alo/solvers.hpp"

namespace alo {

/// Approximate leave-i-out prediction x_i^T beta^{\i}.
struct ObsPrediction {
  Index index = 0;
  double y_loo = 0.0;
  bool degenerate = false;
  std::string reason;
};

using Predictions = std::vector<ObsPrediction>;

/// Observations closer than this to 1 - H_ii * loss''_i = 0 (or J_ii = 0) are flagged.
inline constexpr double kDegenerateTol = 1e-8;

/// y_loo_i = u_i + h_i d1_i / (1 - h_i d2_i), flagging near-zero denominators.
Predictions newton_step(const Eigen::VectorXd& fitted, const Eigen::VectorXd& h_diag,
                        const Eigen::VectorXd& d1, const Eigen::VectorXd& d2);

/// diag of Xa (Xa^T diag(w) Xa + diag(reg_hess))^{-1} Xa^T.
Eigen::VectorXd hat_diagonal(const Eigen::MatrixXd& xa, const Eigen::VectorXd& w,
                             const Eigen::VectorXd& reg_hess, const char* context);

/// Smooth loss with a twice-differentiable regularizer (ridge).
Predictions alo_smooth(const FitResult& fit, const Dataset& data, LossKind loss,
                       const RegularizerSpec& reg);

struct NonsmoothLossDetail {
  Predictions predictions;
  std::vector<Index> singular_set;  // V
  Eigen::VectorXd subgradient;      // g_i for every observation
  Eigen::VectorXd weight;           // a_i for every observation
};

/// Loss with kinks (hinge) and a smooth regularizer (ridge): observations at
/// a kink within kink_tol form V; their subgradients are recovered by least
/// squares from stationarity.
NonsmoothLossDetail alo_nonsmooth_loss_detail(const FitResult& fit, const Dataset& data,
                                              LossKind loss, const RegularizerSpec& reg,
                                              double kink_tol = 1e-5);
Predictions alo_nonsmooth_loss(const FitResult& fit, const Dataset& data, LossKind loss,
                               const RegularizerSpec& reg, double kink_tol = 1e-5);

/// Closed-form hinge + ridge specialization.
NonsmoothLossDetail alo_svm_detail(const FitResult& fit, const Dataset& data, double lambda,
                                   double kink_tol = 1e-5);
Predictions alo_svm(const FitResult& fit, const Dataset& data, double lambda,
                    double kink_tol = 1e-5);

/// Smooth loss with a separable regularizer whose kinks sit at zero (l1), or
/// ridge (every coordinate active).
Predictions alo_nonsmooth_reg(const FitResult& fit, const Dataset& data, LossKind loss,
                              const RegularizerSpec& reg, double zero_tol = 1e-8);

/// Index (k, l) of the rotated basis u_k v_l^T maps to k * p2 + l.
struct NuclearStructure {
  Eigen::MatrixXd U;          // p1 x p1, first m columns from the fit
  Eigen::MatrixXd V;          // p2 x p2
  Eigen::VectorXd sigma;      // length min(p1, p2); zero beyond the rank
  Eigen::VectorXd slope;      // r'(sigma_t): 1 on the support, subgradient g_t beyond
  Index rank = 0;
  std::vector<Index> active;  // E as flattened indices, ascending
  bool strict_subgradient = true;
};

NuclearStructure nuclear_structure(const FitResult& fit, const MatrixDataset& data, double lambda,
                                   double rank_tol = 1e-3);

/// The curvature matrix of the nuclear norm on E, in the order of `active`.
Eigen::MatrixXd nuclear_curvature(const NuclearStructure& s, Index p1, Index p2);

Predictions alo_nuclear(const FitResult& fit, const MatrixDataset& data, double lambda,
                        double rank_tol = 1e-3);

}  // namespace alo
