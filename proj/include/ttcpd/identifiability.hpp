#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ttcpd/panel.hpp"

namespace ttcpd {

/// Connected component of the bipartite observation graph
/// (portfolio i -- year t whenever d_{i,t} is observed).
struct ObservationComponent {
    std::vector<std::size_t> portfolios;
    std::vector<std::size_t> years;
};

struct IdentifiabilityReport {
    bool identifiable = false;
    int numerical_rank = 0;
    int deficiency = 0;
    std::vector<ObservationComponent> components;
    std::vector<std::size_t> unobserved_years;
    std::vector<std::string> notes;
};

/// Connected components of the observation graph. Years without any
/// observation are not part of any component.
std::vector<ObservationComponent> observation_components(const AvailabilityMask& mask);

/// Rank test on the constrained design matrix, with graph diagnostics.
/// The rank decides; the graph only explains.
IdentifiabilityReport check_identifiability(const AvailabilityMask& mask, std::span<const double> rho);

/// Mean of the fitted factor over the years in which the portfolio is
/// observed. Throws EmptyPortfolio if there are none.
double observed_factor_mean(const AvailabilityMask& mask, const FactorPath& factor, std::size_t portfolio);

/// One-line description of a component, e.g. "portfolios {0,2} x years {3..7}".
std::string describe(const ObservationComponent& component, std::span<const std::string> portfolio_ids = {},
                     std::span<const int> year_labels = {});

}  // namespace ttcpd
