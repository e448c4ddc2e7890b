#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ttcpd/panel.hpp"
#include "ttcpd/vasicek.hpp"

namespace ttcpd::testing {

inline DefaultRatePanel empty_panel(std::size_t portfolios, std::size_t years) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < portfolios; ++i) ids.push_back("P" + std::to_string(i + 1));
    std::vector<int> labels;
    for (std::size_t t = 0; t < years; ++t) labels.push_back(2001 + static_cast<int>(t));
    return DefaultRatePanel(ids, labels);
}

/// Panel whose rates satisfy the model exactly for the given K, f, rho.
inline DefaultRatePanel noiseless_panel(const std::vector<double>& k, const std::vector<double>& f,
                                        const std::vector<double>& rho) {
    auto panel = empty_panel(k.size(), f.size());
    for (std::size_t i = 0; i < k.size(); ++i)
        for (std::size_t t = 0; t < f.size(); ++t) panel.set(i, t, pit_pd_from_probit(k[i], rho[i], f[t]));
    return panel;
}

/// Random factor path with time-mean exactly alpha (up to rounding).
inline std::vector<double> random_factor(std::mt19937_64& rng, std::size_t years, double alpha, double scale = 1.0) {
    std::normal_distribution<double> normal;
    std::vector<double> f(years);
    double mean = 0.0;
    for (auto& v : f) {
        v = scale * normal(rng);
        mean += v;
    }
    mean /= static_cast<double>(years);
    for (auto& v : f) v += alpha - mean;
    return f;
}

/// Overlapping-chain mask: portfolio windows overlap pairwise and together
/// cover every year; no portfolio needs to be complete.
inline std::vector<std::vector<bool>> chain_mask(std::mt19937_64& rng, std::size_t portfolios, std::size_t years) {
    std::vector<std::vector<bool>> grid(portfolios, std::vector<bool>(years, false));
    // breakpoints 0 = b_0 <= b_1 <= ... <= b_P = years - 1; window i spans
    // [b_i - overlap, b_{i+1} + overlap] clipped.
    std::uniform_int_distribution<std::size_t> cut(0, years - 1);
    std::vector<std::size_t> b{0};
    for (std::size_t i = 1; i < portfolios; ++i) b.push_back(cut(rng));
    b.push_back(years - 1);
    std::sort(b.begin() + 1, b.end() - 1);
    std::uniform_int_distribution<std::size_t> extra(0, 2);
    for (std::size_t i = 0; i < portfolios; ++i) {
        const std::size_t lo = b[i] >= 1 ? b[i] - std::min<std::size_t>(b[i], extra(rng)) : 0;
        const std::size_t hi = std::min(years - 1, b[i + 1] + extra(rng));
        for (std::size_t t = lo; t <= hi; ++t) grid[i][t] = true;
    }
    return grid;
}

/// Two complementary blocks: portfolios in I0 observed only in S, the rest
/// only outside S.
inline std::vector<std::vector<bool>> block_disjoint_mask(std::mt19937_64& rng, std::size_t portfolios,
                                                          std::size_t years) {
    std::vector<bool> in_i0(portfolios, false), in_s(years, false);
    std::bernoulli_distribution coin(0.5);
    for (auto&& v : in_i0) v = coin(rng);
    for (auto&& v : in_s) v = coin(rng);
    // both blocks non-empty
    in_i0[0] = true;
    in_i0[portfolios - 1] = false;
    in_s[0] = true;
    in_s[years - 1] = false;
    std::vector<std::vector<bool>> grid(portfolios, std::vector<bool>(years, false));
    std::bernoulli_distribution keep(0.85);
    for (std::size_t i = 0; i < portfolios; ++i) {
        bool any = false;
        for (std::size_t t = 0; t < years; ++t) {
            if (in_i0[i] == in_s[t] && keep(rng)) {
                grid[i][t] = true;
                any = true;
            }
        }
        if (!any) {
            for (std::size_t t = 0; t < years; ++t)
                if (in_i0[i] == in_s[t]) {
                    grid[i][t] = true;
                    break;
                }
        }
    }
    return grid;
}

}  // namespace ttcpd::testing
