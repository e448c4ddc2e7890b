#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ttcpd/calibration.hpp"
#include "ttcpd/panel.hpp"
#include "ttcpd/vasicek.hpp"

namespace ttcpd {

struct IterationRecord {
    double max_dk;
    double max_df;
    /// Sum of squared residuals with rho = rho(K) at the new iterate.
    double objective;
};

struct ConvergenceTrace {
    std::vector<IterationRecord> iterations;
};

class NotConverged : public std::runtime_error {
  public:
    NotConverged(const std::string& what, ConvergenceTrace trace)
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const ConvergenceTrace& trace() const { return trace_; }

  private:
    ConvergenceTrace trace_;
};

struct NonlinearFit {
    CalibrationResult result;
    ConvergenceTrace trace;
};

/// Calibration with rho_i = rho(Phi(K_i)). Alternates between updating the
/// correlations from the current K and re-solving the exact-constraint
/// linear system, until max(|dK|, |df|) < tol.
///
/// The panel is checked for identifiability first (SingularSystem).
/// Throws NotConverged after config.max_iter outer iterations.
NonlinearFit fit_nonlinear(const DefaultRatePanel& panel, const AssetClassParams& asset_class,
                           const CalibrationConfig& config);

/// Dispatches on config.rho_mode: FixedRho -> fit_linear (empty trace),
/// BaselLinked -> fit_nonlinear.
NonlinearFit calibrate(const DefaultRatePanel& panel, const CalibrationConfig& config);

/// Objective with correlations tied to K; used by tests and the trace.
double basel_objective(const DefaultRatePanel& panel, const AssetClassParams& asset_class,
                       std::span<const double> k, const FactorPath& factor, double clamp_eps);

}  // namespace ttcpd
