#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ttcpd/calibration.hpp"
#include "ttcpd/identifiability.hpp"
#include "ttcpd/nonlinear.hpp"
#include "ttcpd/panel.hpp"
#include "ttcpd/simulator.hpp"
#include "json.hpp"

namespace ttcpd::io {

// Panel CSV. Two layouts are accepted:
//   portfolio_id,year,defaults,obligors
//   portfolio_id,year,default_rate
// One row per observed cell; missing cells are absent rows. Portfolios keep
// their order of first appearance, years span min..max consecutively.

DefaultRatePanel read_panel(std::istream& in);
DefaultRatePanel read_panel_file(const std::string& path);

/// Writes counts when every observed cell has an obligor count, rates
/// otherwise. Rows are canonical: panel portfolio order, then year.
void write_panel(std::ostream& out, const DefaultRatePanel& panel);
void write_panel_file(const std::string& path, const DefaultRatePanel& panel);

// Mask files: one line per portfolio, one character per year, 'X' (or '1')
// observed, '.' (or '0') missing. '#' starts a comment.

AvailabilityMask read_mask(std::istream& in);
AvailabilityMask read_mask_file(const std::string& path);
void write_mask(std::ostream& out, const AvailabilityMask& mask);

// Factor path files: CSV with header `year,f`.

FactorPath read_factor_path(std::istream& in);
FactorPath read_factor_path_file(const std::string& path);
void write_factor_path(std::ostream& out, const FactorPath& factor);

/// Shortest representation that round-trips (at least 17 significant digits
/// where needed).
std::string format_number(double value);

nlohmann::ordered_json config_to_json(const CalibrationConfig& config);
nlohmann::ordered_json report_to_json(const IdentifiabilityReport& report, const DefaultRatePanel& panel);
nlohmann::ordered_json trace_to_json(const ConvergenceTrace& trace);

/// Full result document: config echo, portfolios, factor path, PIT matrix,
/// residuals, identifiability report, convergence trace, warnings.
nlohmann::ordered_json result_to_json(const DefaultRatePanel& panel, const CalibrationConfig& config,
                                      const CalibrationResult& result, const IdentifiabilityReport& report,
                                      const ConvergenceTrace& trace);

/// Inverse of result_to_json for the numeric payload.
CalibrationResult result_from_json(const nlohmann::ordered_json& doc);

/// CSV result: a long table `section,portfolio_id,year,field,value`.
void write_result_csv(std::ostream& out, const DefaultRatePanel& panel, const CalibrationResult& result);

/// Plot-ready long-format series `series,x,y`.
struct SeriesPoint {
    std::string series;
    double x;
    double y;
};

void write_series_csv(std::ostream& out, const std::vector<SeriesPoint>& points);

/// Factor path, true vs fitted TTC lines and true vs fitted PIT curves.
std::vector<SeriesPoint> recovery_series(const ExperimentResult& experiment);
/// Per-replication estimates, per-size means and truth reference lines.
std::vector<SeriesPoint> sweep_series(const SweepResult& sweep);

nlohmann::ordered_json experiment_to_json(const ExperimentResult& experiment);
nlohmann::ordered_json sweep_to_json(const SweepResult& sweep);

}  // namespace ttcpd::io
