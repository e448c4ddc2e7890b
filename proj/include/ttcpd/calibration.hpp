#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "ttcpd/panel.hpp"
#include "ttcpd/vasicek.hpp"

namespace ttcpd {

/// Exogenous correlations, one per portfolio (selects the linear model).
struct FixedRho {
    std::vector<double> values;
};

/// Correlations tied to the fitted TTC PD through the regulatory function.
struct BaselLinked {
    AssetClassParams params;
};

using RhoMode = std::variant<FixedRho, BaselLinked>;

struct CalibrationConfig {
    /// Target time-mean of the factor path. 0 for a representative cycle,
    /// slightly positive when the sample covers mostly good years.
    double alpha_mean = 0.0;
    double tol = 1e-8;
    int max_iter = 100;
    /// Offset used to move degenerate rates into (0,1) when no obligor
    /// count is known.
    double clamp_eps = 1e-6;
    RhoMode rho_mode = BaselLinked{AssetClassParams::corporate()};
    /// Weight each observed cell by its obligor count. Off by default.
    bool weight_by_obligors = false;

    /// Throws DomainError on tol <= 0, max_iter < 1 or clamp_eps outside (0, 0.5).
    void validate() const;
};

struct Residual {
    std::size_t portfolio;
    std::size_t year;
    /// Fitted minus empirical, in transformed (y) units.
    double value;
};

struct CalibrationResult {
    std::vector<double> k;       ///< probit TTC levels K_i
    std::vector<double> ttc_pd;  ///< p_i = Phi(K_i)
    std::vector<double> rho;
    FactorPath factor;
    /// Fitted conditional PDs, |I| x T, defined for missing cells too.
    std::vector<std::vector<double>> pit_pd;
    std::vector<Residual> residuals;
    int iterations = 0;
    bool converged = false;
    std::vector<ClampWarning> warnings;

    double objective() const;
};

}  // namespace ttcpd
