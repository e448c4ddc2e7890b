#pragma once

namespace ttcpd {

/// Parameters of the regulatory correlation function
///   rho(PD) = rho_min * g + rho_max * (1 - g),  g = (1 - e^{-W PD}) / (1 - e^{-W}).
struct AssetClassParams {
    double rho_min;
    double rho_max;
    double w;

    /// Throws DomainError unless 0 < rho_min <= rho_max < 1 and w > 0.
    void validate() const;

    static AssetClassParams corporate() { return {0.12, 0.24, 50.0}; }
    static AssetClassParams retail() { return {0.03, 0.16, 35.0}; }
};

// All functions below throw DomainError on out-of-range probabilities or
// correlations. rho = 0 is accepted and removes the systematic link.

/// Conditional (point-in-time) default probability given factor value f:
///   Phi((Phi^{-1}(p) - sqrt(rho) f) / sqrt(1 - rho)).
/// Strictly decreasing in f; negative f are bad years.
double pit_pd(double ttc_pd, double rho, double f);

/// Same as pit_pd, taking the probit K = Phi^{-1}(p) directly.
double pit_pd_from_probit(double k, double rho, double f);

/// Worst-case default rate at the given confidence level (0.999 under IRB).
double wcdr(double ttc_pd, double rho, double confidence);

/// Regulatory asset correlation for a through-the-cycle PD.
double basel_rho(double ttc_pd, const AssetClassParams& params);

/// Regression target of the linearised model: sqrt(1 - rho) * Phi^{-1}(d).
/// d must already be clamped into (0,1).
double eta_transform(double d, double rho);

}  // namespace ttcpd
