#pragma once

// Independent certification of reported equilibria. Best-response problems
// are assembled here from the profit definitions; nothing in this module
// reuses the equilibrium assembly.

#include <string>
#include <vector>

#include "gridmech/model.hpp"
#include "gridmech/qp.hpp"

namespace gridmech {

/// Absolute KKT residuals of a QP at a primal-dual point.
struct KktReport {
  bool empty = true;
  double stationarity = 0.0;        // ||Qx + q + A'y - z_l + z_u||_inf
  double primal_equality = 0.0;     // max |row.x - rhs| over = rows
  double primal_inequality = 0.0;   // max (row.x - rhs)+ over <= rows
  double bound_violation = 0.0;     // max distance outside [lower, upper]
  double dual_sign = 0.0;           // max negative part of <= row and bound duals
  double complementarity = 0.0;     // max |dual * slack| over rows and bounds
  std::vector<double> stationarity_by_variable;

  double worst() const;
};

KktReport kkt_residuals(const qp::QuadraticProgram& qp, const qp::Solution& solution);

enum class CertificateMethod { QpBestResponse, GridSearch };

const char* to_string(CertificateMethod m);

struct InvestorCertificate {
  std::string id;
  double profit = 0.0;          // at the reported profile
  double best_profit = 0.0;     // at the best response
  double gain = 0.0;            // best_profit - profit
  double tolerance = 0.0;
  double stationarity = 0.0;    // profile-KKT residual, relative
  bool passed = false;
};

struct NashCertificate {
  CertificateMethod method = CertificateMethod::QpBestResponse;
  std::vector<InvestorCertificate> investors;
  double epsilon = 0.0;          // max gain
  double tolerance = 0.0;        // tolerance of the investor attaining epsilon
  double stationarity_tolerance = 0.0;
  bool passed = false;
  // Withholding check only.
  bool condition_holds = true;   // VOLL threshold at every hour
  double epsilon_bound = 0.0;    // E sum eps * VOLL
  std::vector<std::string> notes;
};

struct BestResponse {
  DecisionProfile profile;  // z* with investor i replaced by its best response
  double profit = 0.0;      // profit at the best response
  double current_profit = 0.0;
  double gain = 0.0;
  double stationarity = 0.0;  // relative KKT residual of the reported decision
  qp::QuadraticProgram problem;
  qp::Solution solution;
};

struct CertifyOptions {
  /// Gain tolerance per investor: rel_tol * max(1, |profit|).
  double rel_tol = 1e-3;
  /// Relative stationarity of the reported decision in its own best-response
  /// problem.
  double stationarity_tol = 1e-5;
  qp::Settings settings{1e-12, 1e-12, 1e-12, 200, true};
};

/// Investor `investor` (ordinal, VRE first) re-optimizes against fixed
/// rivals under the P, PI or PIU profit rules. MCP throws UnsupportedError.
BestResponse best_response(const MarketInstance& instance, MechanismKind mechanism,
                           const DecisionProfile& profile, std::size_t investor,
                           const CertifyOptions& options = {});

/// Profit of one investor under the mechanism's price and payment rules,
/// evaluated from primitives.
double mechanism_profit(const MarketInstance& instance, MechanismKind mechanism,
                        const DecisionProfile& profile, std::size_t investor);

NashCertificate certify(const MarketInstance& instance, MechanismKind mechanism,
                        const DecisionProfile& profile, const CertifyOptions& options = {});

struct WithholdingCheckOptions {
  std::size_t grid_points = 200;
  std::size_t refinement_rounds = 3;
  HourlyTable epsilon;  // margins used to build the profile; empty: default
};

/// Unilateral-deviation search around a symmetric withholding profile.
NashCertificate mcp_withholding_check(const MarketInstance& instance,
                                      const DecisionProfile& profile,
                                      const WithholdingCheckOptions& options = {});

/// Threshold value of VOLL above which withholding is certified at hour (w, t).
double withholding_threshold(const MarketInstance& instance, std::size_t w, std::size_t t,
                             std::size_t investors);

}  // namespace gridmech
