#include "ttcpd/linear.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "ttcpd/errors.hpp"
#include "ttcpd/identifiability.hpp"
#include "ttcpd/normal.hpp"
#include "ttcpd/vasicek.hpp"

namespace ttcpd {

namespace {

Eigen::MatrixXd stacked(const DesignSystem& system) {
    const auto cols = static_cast<Eigen::Index>(system.columns());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(system.rows.size()) + 1, cols);
    Eigen::Index r = 0;
    for (const auto& row : system.rows) {
        a(r, static_cast<Eigen::Index>(row.portfolio)) = 1.0;
        a(r, static_cast<Eigen::Index>(system.portfolios + row.year)) = -row.loading;
        ++r;
    }
    for (std::size_t t = 0; t < system.years; ++t) a(r, static_cast<Eigen::Index>(system.portfolios + t)) = 1.0;
    return a;
}

AvailabilityMask system_mask(const DesignSystem& system) {
    std::vector<std::vector<bool>> grid(system.portfolios, std::vector<bool>(system.years, false));
    for (const auto& row : system.rows) grid[row.portfolio][row.year] = true;
    return AvailabilityMask(std::move(grid));
}

}  // namespace

DesignSystem build_system(const DefaultRatePanel& panel, std::span<const double> rho, double alpha_mean,
                          double clamp_eps, std::vector<ClampWarning>* warnings, bool weight_by_obligors) {
    if (rho.size() != panel.portfolios()) {
        std::ostringstream msg;
        msg << "expected " << panel.portfolios() << " correlations, got " << rho.size();
        throw DomainError(msg.str());
    }
    DesignSystem system;
    system.portfolios = panel.portfolios();
    system.years = panel.years();
    system.constraint_rhs = static_cast<double>(panel.years()) * alpha_mean;
    for (std::size_t i = 0; i < panel.portfolios(); ++i) {
        if (panel.observed_count(i) == 0) throw EmptyPortfolio(panel.portfolio_ids()[i]);
        const double loading = std::sqrt(rho[i]);
        for (std::size_t t = 0; t < panel.years(); ++t) {
            if (!panel.observed(i, t)) continue;
            const double d = panel.clamped_rate(i, t, clamp_eps, warnings);
            double weight = 1.0;
            if (weight_by_obligors) {
                const auto n = panel.obligors(i, t);
                if (!n) throw DomainError("obligor weighting requested but counts are missing");
                weight = static_cast<double>(*n);
            }
            system.rows.push_back({i, t, loading, eta_transform(d, rho[i]), weight});
        }
    }
    return system;
}

std::vector<std::vector<double>> dense_matrix(const DesignSystem& system) {
    const Eigen::MatrixXd a = stacked(system);
    std::vector<std::vector<double>> out(static_cast<std::size_t>(a.rows()), std::vector<double>(system.columns()));
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) out[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = a(r, c);
    return out;
}

int design_rank(const DesignSystem& system) {
    const Eigen::MatrixXd a = stacked(system);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    int rank = 0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) rank += sv(k) > kRankTolerance * sv(0) ? 1 : 0;
    return rank;
}

LinearSolution solve_constrained_ls(const DesignSystem& system) {
    const std::size_t p = system.portfolios;
    const std::size_t years = system.years;
    const int rank = design_rank(system);
    const int deficiency = static_cast<int>(system.columns()) - rank;
    if (deficiency > 0) {
        std::vector<std::string> groups;
        for (const auto& c : observation_components(system_mask(system))) groups.push_back(describe(c));
        std::ostringstream msg;
        msg << "design matrix is rank deficient (rank " << rank << " of " << system.columns() << ", deficiency "
            << deficiency << ")";
        throw SingularSystem(msg.str(), deficiency, std::move(groups));
    }

    // f_T = C - sum_{t<T} f_t, so row (i,t=T) becomes
    // eta + s_i C ~ K_i + s_i sum_{t<T} f_t.
    const auto free_f = static_cast<Eigen::Index>(years - 1);
    const auto cols = static_cast<Eigen::Index>(p) + free_f;
    const auto m = static_cast<Eigen::Index>(system.rows.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, cols);
    Eigen::VectorXd b(m);
    for (Eigen::Index r = 0; r < m; ++r) {
        const auto& row = system.rows[static_cast<std::size_t>(r)];
        const double scale = std::sqrt(row.weight);
        a(r, static_cast<Eigen::Index>(row.portfolio)) = scale;
        if (row.year + 1 < years) {
            a(r, static_cast<Eigen::Index>(p + row.year)) = -row.loading * scale;
            b(r) = row.eta * scale;
        } else {
            for (Eigen::Index c = 0; c < free_f; ++c) a(r, static_cast<Eigen::Index>(p) + c) = row.loading * scale;
            b(r) = (row.eta + row.loading * system.constraint_rhs) * scale;
        }
    }
    const Eigen::VectorXd x = a.colPivHouseholderQr().solve(b);

    LinearSolution solution;
    solution.k.assign(x.data(), x.data() + p);
    solution.factor.values.resize(years);
    double partial = 0.0;
    for (std::size_t t = 0; t + 1 < years; ++t) {
        solution.factor.values[t] = x(static_cast<Eigen::Index>(p + t));
        partial += solution.factor.values[t];
    }
    solution.factor.values[years - 1] = system.constraint_rhs - partial;

    solution.residuals.reserve(system.rows.size());
    for (const auto& row : system.rows) {
        const double fitted = solution.k[row.portfolio] - row.loading * solution.factor.values[row.year];
        solution.residuals.push_back(fitted - row.eta);
    }
    return solution;
}

CalibrationResult fit_linear(const DefaultRatePanel& panel, std::span<const double> rho,
                             const CalibrationConfig& config) {
    config.validate();
    CalibrationResult result;
    const DesignSystem system = build_system(panel, rho, config.alpha_mean, config.clamp_eps, &result.warnings,
                                             config.weight_by_obligors);
    LinearSolution solution = solve_constrained_ls(system);

    result.k = std::move(solution.k);
    result.rho.assign(rho.begin(), rho.end());
    result.factor = std::move(solution.factor);
    result.ttc_pd.reserve(result.k.size());
    for (double k : result.k) result.ttc_pd.push_back(norm_cdf(k));
    result.pit_pd.assign(panel.portfolios(), std::vector<double>(panel.years()));
    for (std::size_t i = 0; i < panel.portfolios(); ++i)
        for (std::size_t t = 0; t < panel.years(); ++t)
            result.pit_pd[i][t] = pit_pd_from_probit(result.k[i], result.rho[i], result.factor.values[t]);
    for (std::size_t r = 0; r < system.rows.size(); ++r)
        result.residuals.push_back({system.rows[r].portfolio, system.rows[r].year, solution.residuals[r]});
    result.iterations = 1;
    result.converged = true;
    return result;
}

void CalibrationConfig::validate() const {
    if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
    if (max_iter < 1) throw DomainError("max_iter must be at least 1");
    if (!(clamp_eps > 0.0 && clamp_eps < 0.5)) throw DomainError("clamp_eps must lie in (0, 0.5)");
    if (!std::isfinite(alpha_mean)) throw DomainError("alpha_mean must be finite");
    if (const auto* basel = std::get_if<BaselLinked>(&rho_mode)) basel->params.validate();
}

double CalibrationResult::objective() const {
    double sum = 0.0;
    for (const auto& r : residuals) sum += r.value * r.value;
    return sum;
}

}  // namespace ttcpd
