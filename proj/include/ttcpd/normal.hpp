#pragma once

namespace ttcpd {

/// Standard normal cumulative distribution function. Absolute error is at
/// the level of double rounding (well below 1e-12).
double norm_cdf(double x);

/// Standard normal density.
double norm_pdf(double x);

/// Inverse of norm_cdf. Throws DomainError unless 0 < p < 1.
///
/// Wichura's AS 241 rational approximation followed by one Halley step
/// against norm_cdf; the round trip norm_cdf(norm_quantile(p)) agrees with
/// p to a few ulps.
double norm_quantile(double p);

}  // namespace ttcpd
