#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "ttcpd/calibration.hpp"
#include "ttcpd/nonlinear.hpp"
#include "ttcpd/panel.hpp"
#include "ttcpd/vasicek.hpp"

namespace ttcpd {

/// f_t = phi f_{t-1} + sqrt(1 - phi^2) eps_t with f_1 ~ N(0,1), so every
/// marginal is standard normal.
struct Ar1Factor {
    double persistence;
};

using FactorSpec = std::variant<FactorPath, Ar1Factor>;

struct SimulationSpec {
    std::vector<double> true_ttc_pds;
    std::size_t horizon = 0;
    FactorSpec factor;
    std::int64_t n_obligors = 10000;
    AssetClassParams asset_class = AssetClassParams::corporate();
    std::optional<AvailabilityMask> mask;
    std::uint64_t seed = 0;

    /// Throws DomainError on invalid PDs, horizon, counts or persistence, or
    /// on a mask/path whose shape does not match.
    void validate() const;
};

/// Random streams. Every draw comes from its own std::mt19937_64 seeded via
/// std::seed_seq with (seed low word, seed high word, stream tag,
/// replication, portfolio, year), so results do not depend on the order in
/// which cells or replications are generated.
enum class StreamTag : std::uint32_t { Factor = 1, Defaults = 2 };

std::mt19937_64 make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t replication = 0,
                            std::uint64_t portfolio = 0, std::uint64_t year = 0);

FactorPath gen_factor_path(const SimulationSpec& spec);

struct GeneratedPanel {
    DefaultRatePanel panel;
    std::vector<double> rho;
    /// True conditional PDs, |I| x T, for every cell (masked ones too).
    std::vector<std::vector<double>> true_pit;
};

/// Binomial defaults per (portfolio, year) conditional on the shared factor.
/// Portfolio ids are P1..P|I|, years 1..T. The mask, if any, is applied
/// after generation.
GeneratedPanel gen_default_panel(const SimulationSpec& spec, const FactorPath& factor,
                                 std::uint64_t replication = 0);

struct ExperimentResult {
    std::uint64_t seed = 0;
    std::vector<double> true_ttc_pds;
    std::vector<double> true_rho;
    FactorPath true_factor;
    GeneratedPanel generated;
    CalibrationResult fit;
    ConvergenceTrace trace;
    /// fitted minus true TTC PD, per portfolio
    std::vector<double> ttc_errors;
    std::vector<double> ttc_relative_errors;
};

/// Generates one panel (replication 0), calibrates, scores against truth.
/// Rejects unidentifiable masks before generating anything.
ExperimentResult run_recovery_experiment(const SimulationSpec& spec, const CalibrationConfig& config);

struct SweepEntry {
    std::int64_t n_obligors;
    std::size_t replication;
    bool ok;
    std::vector<double> ttc_estimates;  ///< empty when !ok
    std::string error;
};

struct SweepSummary {
    std::int64_t n_obligors;
    std::size_t succeeded;
    std::vector<double> mean_estimate;
    std::vector<double> stddev_estimate;
    std::vector<double> mean_abs_error;
};

struct SweepResult {
    std::uint64_t seed = 0;
    std::vector<double> true_ttc_pds;
    FactorPath true_factor;
    std::vector<SweepEntry> entries;  ///< ordered by (size, replication)
    std::vector<SweepSummary> summary;
};

/// Recalibrates `replications` fresh panels for every size. Replication r
/// uses the default streams of replication index r, so replication 0 of a
/// size reproduces run_recovery_experiment at that size. Failed
/// replications are recorded; throws only if every replication of a size
/// fails. `threads` > 1 distributes replications over worker threads with
/// identical output.
SweepResult run_sample_size_sweep(const SimulationSpec& spec, const std::vector<std::int64_t>& sizes,
                                  std::size_t replications, const CalibrationConfig& config,
                                  unsigned threads = 1);

/// The six-portfolio corporate setup: TTC PDs 0.5%, 1.7%, 3.4%, 5.6%, 7%, 9%
/// over the given factor path.
SimulationSpec reference_setup(const FactorPath& factor, std::int64_t n_obligors, std::uint64_t seed);

}  // namespace ttcpd
