#include "ttcpd/nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ttcpd/errors.hpp"
#include "ttcpd/identifiability.hpp"
#include "ttcpd/linear.hpp"
#include "ttcpd/normal.hpp"

namespace ttcpd {

namespace {

std::vector<double> linked_rho(std::span<const double> k, const AssetClassParams& params) {
    std::vector<double> rho;
    rho.reserve(k.size());
    for (double ki : k) rho.push_back(basel_rho(norm_cdf(ki), params));
    return rho;
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) m = std::max(m, std::fabs(a[j] - b[j]));
    return m;
}

// Starting point: probit of the clamped mean observed rate of each portfolio.
std::vector<double> initial_k(const DefaultRatePanel& panel, double clamp_eps) {
    std::vector<double> k(panel.portfolios());
    for (std::size_t i = 0; i < panel.portfolios(); ++i) {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t t = 0; t < panel.years(); ++t) {
            if (!panel.observed(i, t)) continue;
            sum += panel.clamped_rate(i, t, clamp_eps);
            ++n;
        }
        if (n == 0) throw EmptyPortfolio(panel.portfolio_ids()[i]);
        k[i] = norm_quantile(sum / static_cast<double>(n));
    }
    return k;
}

}  // namespace

double basel_objective(const DefaultRatePanel& panel, const AssetClassParams& asset_class, std::span<const double> k,
                       const FactorPath& factor, double clamp_eps) {
    const auto rho = linked_rho(k, asset_class);
    double sum = 0.0;
    for (std::size_t i = 0; i < panel.portfolios(); ++i) {
        const double loading = std::sqrt(rho[i]);
        for (std::size_t t = 0; t < panel.years(); ++t) {
            if (!panel.observed(i, t)) continue;
            const double r = eta_transform(panel.clamped_rate(i, t, clamp_eps), rho[i]) -
                             (k[i] - loading * factor.values[t]);
            sum += r * r;
        }
    }
    return sum;
}

NonlinearFit fit_nonlinear(const DefaultRatePanel& panel, const AssetClassParams& asset_class,
                           const CalibrationConfig& config) {
    config.validate();
    asset_class.validate();

    std::vector<double> k = initial_k(panel, config.clamp_eps);
    {
        const auto report = check_identifiability(panel.mask(), linked_rho(k, asset_class));
        if (!report.identifiable) {
            std::vector<std::string> groups;
            for (const auto& c : report.components)
                groups.push_back(describe(c, panel.portfolio_ids(), panel.year_labels()));
            std::ostringstream msg;
            msg << "panel is not identifiable (deficiency " << report.deficiency << ")";
            throw SingularSystem(msg.str(), report.deficiency, std::move(groups));
        }
    }

    ConvergenceTrace trace;
    std::vector<ClampWarning> warnings;
    FactorPath factor{std::vector<double>(panel.years(), config.alpha_mean)};
    bool converged = false;
    for (int iter = 0; iter < config.max_iter; ++iter) {
        const auto rho = linked_rho(k, asset_class);
        const DesignSystem system = build_system(panel, rho, config.alpha_mean, config.clamp_eps,
                                                 iter == 0 ? &warnings : nullptr, config.weight_by_obligors);
        LinearSolution next = solve_constrained_ls(system);
        const double dk = max_abs_diff(next.k, k);
        const double df = max_abs_diff(next.factor.values, factor.values);
        k = std::move(next.k);
        factor = std::move(next.factor);
        trace.iterations.push_back({dk, df, basel_objective(panel, asset_class, k, factor, config.clamp_eps)});
        if (std::max(dk, df) < config.tol) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        std::ostringstream msg;
        msg << "correlation fixed point did not converge in " << config.max_iter << " iterations (last max |dK| "
            << trace.iterations.back().max_dk << ", max |df| " << trace.iterations.back().max_df << ")";
        throw NotConverged(msg.str(), std::move(trace));
    }

    NonlinearFit fit;
    auto& result = fit.result;
    result.k = k;
    result.rho = linked_rho(k, asset_class);
    result.factor = factor;
    for (double ki : k) result.ttc_pd.push_back(norm_cdf(ki));
    result.pit_pd.assign(panel.portfolios(), std::vector<double>(panel.years()));
    for (std::size_t i = 0; i < panel.portfolios(); ++i) {
        const double loading = std::sqrt(result.rho[i]);
        for (std::size_t t = 0; t < panel.years(); ++t) {
            result.pit_pd[i][t] = pit_pd_from_probit(k[i], result.rho[i], factor.values[t]);
            if (panel.observed(i, t)) {
                const double eta = eta_transform(panel.clamped_rate(i, t, config.clamp_eps), result.rho[i]);
                result.residuals.push_back({i, t, (k[i] - loading * factor.values[t]) - eta});
            }
        }
    }
    result.iterations = static_cast<int>(trace.iterations.size());
    result.converged = true;
    result.warnings = std::move(warnings);
    fit.trace = std::move(trace);
    return fit;
}

NonlinearFit calibrate(const DefaultRatePanel& panel, const CalibrationConfig& config) {
    if (const auto* fixed = std::get_if<FixedRho>(&config.rho_mode)) {
        return {fit_linear(panel, fixed->values, config), {}};
    }
    return fit_nonlinear(panel, std::get<BaselLinked>(config.rho_mode).params, config);
}

}  // namespace ttcpd
