#include "ttcpd/vasicek.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "ttcpd/errors.hpp"
#include "ttcpd/normal.hpp"

namespace ttcpd {

namespace {

void require_probability(double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) {
        std::ostringstream msg;
        msg << what << " must lie in (0,1), got " << p;
        throw DomainError(msg.str());
    }
}

void require_rho(double rho) {
    if (!(rho >= 0.0 && rho < 1.0)) {
        std::ostringstream msg;
        msg << "correlation must lie in [0,1), got " << rho;
        throw DomainError(msg.str());
    }
}

void require_finite(double x, const char* what) {
    if (!std::isfinite(x)) {
        throw DomainError(std::string(what) + " must be finite");
    }
}

}  // namespace

void AssetClassParams::validate() const {
    if (!(rho_min > 0.0 && rho_min <= rho_max && rho_max < 1.0)) {
        std::ostringstream msg;
        msg << "asset class requires 0 < rho_min <= rho_max < 1, got rho_min=" << rho_min
            << " rho_max=" << rho_max;
        throw DomainError(msg.str());
    }
    if (!(w > 0.0) || !std::isfinite(w)) {
        throw DomainError("asset class decay W must be positive and finite");
    }
}

double pit_pd_from_probit(double k, double rho, double f) {
    require_finite(k, "probit level");
    require_rho(rho);
    require_finite(f, "factor value");
    return norm_cdf((k - std::sqrt(rho) * f) / std::sqrt(1.0 - rho));
}

double pit_pd(double ttc_pd, double rho, double f) {
    require_probability(ttc_pd, "TTC PD");
    return pit_pd_from_probit(norm_quantile(ttc_pd), rho, f);
}

double wcdr(double ttc_pd, double rho, double confidence) {
    require_probability(ttc_pd, "TTC PD");
    require_rho(rho);
    require_probability(confidence, "confidence");
    return norm_cdf((norm_quantile(ttc_pd) + std::sqrt(rho) * norm_quantile(confidence)) / std::sqrt(1.0 - rho));
}

double basel_rho(double ttc_pd, const AssetClassParams& params) {
    require_probability(ttc_pd, "TTC PD");
    params.validate();
    // expm1 keeps g accurate for small W * PD
    const double g = std::expm1(-params.w * ttc_pd) / std::expm1(-params.w);
    return params.rho_min * g + params.rho_max * (1.0 - g);
}

double eta_transform(double d, double rho) {
    require_probability(d, "default rate");
    require_rho(rho);
    return std::sqrt(1.0 - rho) * norm_quantile(d);
}

}  // namespace ttcpd
