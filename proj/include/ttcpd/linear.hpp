#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ttcpd/calibration.hpp"
#include "ttcpd/panel.hpp"

namespace ttcpd {

/// Singular values below this fraction of the largest count as zero.
inline constexpr double kRankTolerance = 1e-8;

/// One regression row: eta ~ K_portfolio - loading * f_year.
struct DesignRow {
    std::size_t portfolio;
    std::size_t year;
    double loading;  ///< sqrt(rho_i)
    double eta;
    double weight = 1.0;
};

/// Linearised model on the observed cells plus the exact constraint
/// sum_t f_t = T * alpha_mean. Columns are ordered K_1..K_|I| then f_1..f_T.
struct DesignSystem {
    std::size_t portfolios = 0;
    std::size_t years = 0;
    std::vector<DesignRow> rows;
    double constraint_rhs = 0.0;  ///< T * alpha_mean

    std::size_t columns() const { return portfolios + years; }
};

/// Result of the constrained least-squares solve.
struct LinearSolution {
    std::vector<double> k;
    FactorPath factor;
    /// Fitted minus eta, one entry per design row, in row order.
    std::vector<double> residuals;
};

/// Builds the system from a panel, omitting rows for missing cells.
/// Throws EmptyPortfolio when a portfolio has no observed cell and
/// DomainError on invalid correlations.
DesignSystem build_system(const DefaultRatePanel& panel, std::span<const double> rho, double alpha_mean,
                          double clamp_eps, std::vector<ClampWarning>* warnings = nullptr,
                          bool weight_by_obligors = false);

/// Dense (rows + 1) x columns matrix: observation rows then the constraint row.
std::vector<std::vector<double>> dense_matrix(const DesignSystem& system);

/// Numerical rank of the stacked design matrix under kRankTolerance.
int design_rank(const DesignSystem& system);

/// Minimises the (weighted) squared row residuals with the constraint held
/// exactly by eliminating f_T. Throws SingularSystem when the stacked design
/// matrix is rank deficient.
LinearSolution solve_constrained_ls(const DesignSystem& system);

/// Fixed-correlation calibration. Fitted PIT PDs cover every cell, missing
/// ones included.
CalibrationResult fit_linear(const DefaultRatePanel& panel, std::span<const double> rho,
                             const CalibrationConfig& config);

}  // namespace ttcpd
