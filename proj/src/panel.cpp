#include "ttcpd/panel.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "ttcpd/errors.hpp"

namespace ttcpd {

double FactorPath::mean() const {
    if (values.empty()) return 0.0;
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

AvailabilityMask::AvailabilityMask(std::vector<std::vector<bool>> grid) : grid_(std::move(grid)) {
    if (grid_.empty() || grid_.front().empty()) {
        throw DomainError("availability mask must have at least one portfolio and one year");
    }
    for (const auto& row : grid_) {
        if (row.size() != grid_.front().size()) {
            throw DomainError("availability mask rows must all have the same length");
        }
    }
    if (observed_count() == 0) {
        throw DomainError("availability mask has no observed cell");
    }
}

AvailabilityMask AvailabilityMask::full(std::size_t portfolios, std::size_t years) {
    return AvailabilityMask(std::vector<std::vector<bool>>(portfolios, std::vector<bool>(years, true)));
}

std::size_t AvailabilityMask::observed_count() const {
    std::size_t n = 0;
    for (const auto& row : grid_) n += static_cast<std::size_t>(std::count(row.begin(), row.end(), true));
    return n;
}

std::string ClampWarning::message() const {
    std::ostringstream msg;
    msg.precision(17);
    msg << "clamped default rate of portfolio '" << portfolio_id << "' in year " << year << " from " << original
        << " to " << clamped;
    return msg.str();
}

DefaultRatePanel::DefaultRatePanel(std::vector<std::string> portfolio_ids, std::vector<int> years)
    : ids_(std::move(portfolio_ids)), years_(std::move(years)) {
    if (ids_.empty() || years_.empty()) {
        throw DomainError("panel needs at least one portfolio and one year");
    }
    if (std::set<std::string>(ids_.begin(), ids_.end()).size() != ids_.size()) {
        throw DomainError("portfolio ids must be unique");
    }
    for (std::size_t t = 1; t < years_.size(); ++t) {
        if (years_[t] <= years_[t - 1]) {
            throw DomainError("years must be strictly increasing");
        }
    }
    cells_.resize(ids_.size() * years_.size());
    counts_.resize(cells_.size());
}

void DefaultRatePanel::set(std::size_t i, std::size_t t, double rate, std::optional<std::int64_t> obligors) {
    if (i >= portfolios() || t >= years()) {
        throw DomainError("panel cell index out of range");
    }
    if (!(rate >= 0.0 && rate <= 1.0)) {
        std::ostringstream msg;
        msg << "default rate of portfolio '" << ids_[i] << "' in year " << years_[t] << " must lie in [0,1], got "
            << rate;
        throw DomainError(msg.str());
    }
    if (obligors && *obligors < 1) {
        throw DomainError("obligor count must be positive");
    }
    cells_[index(i, t)] = rate;
    counts_[index(i, t)] = obligors;
}

void DefaultRatePanel::erase(std::size_t i, std::size_t t) {
    cells_[index(i, t)].reset();
    counts_[index(i, t)].reset();
}

double DefaultRatePanel::rate(std::size_t i, std::size_t t) const {
    const auto& cell = cells_[index(i, t)];
    if (!cell) {
        throw DomainError("default rate of portfolio '" + ids_[i] + "' in year " + std::to_string(years_[t]) +
                          " is missing");
    }
    return *cell;
}

bool DefaultRatePanel::has_obligor_counts() const {
    return std::any_of(counts_.begin(), counts_.end(), [](const auto& c) { return c.has_value(); });
}

double DefaultRatePanel::clamped_rate(std::size_t i, std::size_t t, double clamp_eps,
                                      std::vector<ClampWarning>* warnings) const {
    const double d = rate(i, t);
    if (d > 0.0 && d < 1.0) return d;
    const auto n = obligors(i, t);
    const double offset = n ? 0.5 / static_cast<double>(*n) : clamp_eps;
    const double clamped = d <= 0.0 ? offset : 1.0 - offset;
    if (warnings) warnings->push_back({ids_[i], years_[t], d, clamped});
    return clamped;
}

std::size_t DefaultRatePanel::observed_count() const {
    return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(), [](const auto& c) { return c.has_value(); }));
}

std::size_t DefaultRatePanel::observed_count(std::size_t i) const {
    std::size_t n = 0;
    for (std::size_t t = 0; t < years(); ++t) n += observed(i, t) ? 1 : 0;
    return n;
}

AvailabilityMask DefaultRatePanel::mask() const {
    std::vector<std::vector<bool>> grid(portfolios(), std::vector<bool>(years()));
    for (std::size_t i = 0; i < portfolios(); ++i)
        for (std::size_t t = 0; t < years(); ++t) grid[i][t] = observed(i, t);
    return AvailabilityMask(std::move(grid));
}

void DefaultRatePanel::apply_mask(const AvailabilityMask& mask) {
    if (mask.portfolios() != portfolios() || mask.years() != years()) {
        throw DomainError("mask shape does not match the panel");
    }
    for (std::size_t i = 0; i < portfolios(); ++i)
        for (std::size_t t = 0; t < years(); ++t)
            if (!mask.observed(i, t)) erase(i, t);
}

std::optional<std::size_t> DefaultRatePanel::portfolio_index(const std::string& id) const {
    const auto it = std::find(ids_.begin(), ids_.end(), id);
    if (it == ids_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - ids_.begin());
}

void DefaultRatePanel::validate() const {
    if (!has_obligor_counts()) return;
    for (std::size_t k = 0; k < cells_.size(); ++k) {
        if (cells_[k] && !counts_[k]) {
            const std::size_t i = k / years();
            const std::size_t t = k % years();
            throw DomainError("portfolio '" + ids_[i] + "' in year " + std::to_string(years_[t]) +
                              " has a default rate but no obligor count");
        }
    }
}

}  // namespace ttcpd
