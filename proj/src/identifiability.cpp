#include "ttcpd/identifiability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "ttcpd/errors.hpp"
#include "ttcpd/linear.hpp"

namespace ttcpd {

namespace {

class DisjointSets {
  public:
    explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent_[std::max(a, b)] = std::min(a, b);
    }

  private:
    std::vector<std::size_t> parent_;
};

void append_ranges(std::ostringstream& out, const std::vector<std::size_t>& items, std::span<const int> labels) {
    auto label = [&](std::size_t k) { return labels.empty() ? static_cast<long>(k) : static_cast<long>(labels[k]); };
    out << '{';
    for (std::size_t a = 0; a < items.size();) {
        std::size_t b = a;
        while (b + 1 < items.size() && items[b + 1] == items[b] + 1) ++b;
        if (a != 0) out << ',';
        out << label(items[a]);
        if (b > a) out << ".." << label(items[b]);
        a = b + 1;
    }
    out << '}';
}

}  // namespace

std::vector<ObservationComponent> observation_components(const AvailabilityMask& mask) {
    const std::size_t p = mask.portfolios();
    const std::size_t years = mask.years();
    DisjointSets sets(p + years);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t t = 0; t < years; ++t)
            if (mask.observed(i, t)) sets.unite(i, p + t);

    std::vector<bool> touched(years, false);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t t = 0; t < years; ++t)
            if (mask.observed(i, t)) touched[t] = true;

    std::vector<ObservationComponent> components;
    std::vector<long> slot(p + years, -1);
    auto component_of = [&](std::size_t node) -> ObservationComponent& {
        const std::size_t root = sets.find(node);
        if (slot[root] < 0) {
            slot[root] = static_cast<long>(components.size());
            components.emplace_back();
        }
        return components[static_cast<std::size_t>(slot[root])];
    };
    for (std::size_t i = 0; i < p; ++i) component_of(i).portfolios.push_back(i);
    for (std::size_t t = 0; t < years; ++t)
        if (touched[t]) component_of(p + t).years.push_back(t);
    return components;
}

std::string describe(const ObservationComponent& component, std::span<const std::string> portfolio_ids,
                     std::span<const int> year_labels) {
    std::ostringstream out;
    out << "portfolios ";
    if (portfolio_ids.empty()) {
        append_ranges(out, component.portfolios, {});
    } else {
        out << '{';
        for (std::size_t k = 0; k < component.portfolios.size(); ++k)
            out << (k ? "," : "") << portfolio_ids[component.portfolios[k]];
        out << '}';
    }
    out << " x years ";
    append_ranges(out, component.years, year_labels);
    return out.str();
}

IdentifiabilityReport check_identifiability(const AvailabilityMask& mask, std::span<const double> rho) {
    IdentifiabilityReport report;
    const std::size_t p = mask.portfolios();
    const std::size_t years = mask.years();
    if (rho.size() != p) {
        throw DomainError("check_identifiability: one correlation per portfolio required");
    }

    DesignSystem system;
    system.portfolios = p;
    system.years = years;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t t = 0; t < years; ++t)
            if (mask.observed(i, t)) system.rows.push_back({i, t, std::sqrt(rho[i]), 0.0, 1.0});

    report.numerical_rank = design_rank(system);
    report.deficiency = static_cast<int>(system.columns()) - report.numerical_rank;
    report.identifiable = report.deficiency == 0;
    report.components = observation_components(mask);

    for (std::size_t t = 0; t < years; ++t) {
        bool seen = false;
        for (std::size_t i = 0; i < p && !seen; ++i) seen = mask.observed(i, t);
        if (!seen) report.unobserved_years.push_back(t);
    }

    std::size_t empty_portfolios = 0;
    for (std::size_t i = 0; i < p; ++i) {
        bool seen = false;
        for (std::size_t t = 0; t < years && !seen; ++t) seen = mask.observed(i, t);
        if (!seen) {
            ++empty_portfolios;
            report.notes.push_back("portfolio " + std::to_string(i) + " has no observed year");
        }
    }
    if (report.components.size() > 1) {
        std::ostringstream note;
        note << "observation graph has " << report.components.size()
             << " disconnected components; their relative factor levels cannot be told apart";
        report.notes.push_back(note.str());
    }
    for (std::size_t t : report.unobserved_years) {
        report.notes.push_back("year " + std::to_string(t) + " has no observation; its factor value is free");
    }

    // With every loading positive the null space of the observation rows is
    // one common shift per component plus one free value per unobserved
    // year; the constraint removes a single direction.
    const bool all_loaded = std::all_of(rho.begin(), rho.end(), [](double r) { return r > 0.0; });
    if (all_loaded && empty_portfolios == 0) {
        const int predicted =
            static_cast<int>(report.components.size() + report.unobserved_years.size()) - 1;
        if (predicted != report.deficiency) {
            std::ostringstream note;
            note << "graph heuristic predicts deficiency " << predicted << " but the rank test finds "
                 << report.deficiency << "; the rank test is authoritative";
            report.notes.push_back(note.str());
        }
    } else {
        report.notes.push_back("graph heuristic not applicable (zero correlation or empty portfolio); rank test only");
    }
    return report;
}

double observed_factor_mean(const AvailabilityMask& mask, const FactorPath& factor, std::size_t portfolio) {
    if (portfolio >= mask.portfolios() || factor.size() != mask.years()) {
        throw DomainError("observed_factor_mean: shape mismatch");
    }
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < mask.years(); ++t) {
        if (mask.observed(portfolio, t)) {
            sum += factor.values[t];
            ++n;
        }
    }
    if (n == 0) throw EmptyPortfolio(std::to_string(portfolio));
    return sum / static_cast<double>(n);
}

}  // namespace ttcpd
