#include "ttcpd/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "ttcpd/errors.hpp"
#include "ttcpd/identifiability.hpp"

namespace ttcpd {

void SimulationSpec::validate() const {
    if (true_ttc_pds.empty()) throw DomainError("simulation needs at least one portfolio");
    for (double p : true_ttc_pds) {
        if (!(p > 0.0 && p < 1.0)) throw DomainError("true TTC PDs must lie in (0,1)");
    }
    if (horizon == 0) throw DomainError("simulation horizon must be positive");
    if (n_obligors < 1) throw DomainError("n_obligors must be at least 1");
    asset_class.validate();
    if (const auto* path = std::get_if<FactorPath>(&factor)) {
        if (path->size() != horizon) throw DomainError("explicit factor path length does not match the horizon");
        for (double f : path->values)
            if (!std::isfinite(f)) throw DomainError("factor path values must be finite");
    } else {
        const double phi = std::get<Ar1Factor>(factor).persistence;
        if (!(phi > -1.0 && phi < 1.0)) throw DomainError("AR(1) persistence must lie in (-1,1)");
    }
    if (mask && (mask->portfolios() != true_ttc_pds.size() || mask->years() != horizon)) {
        throw DomainError("mask shape does not match the simulation");
    }
}

std::mt19937_64 make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t replication, std::uint64_t portfolio,
                            std::uint64_t year) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(replication),
                      static_cast<std::uint32_t>(replication >> 32), static_cast<std::uint32_t>(portfolio),
                      static_cast<std::uint32_t>(year)};
    return std::mt19937_64(seq);
}

FactorPath gen_factor_path(const SimulationSpec& spec) {
    spec.validate();
    if (const auto* path = std::get_if<FactorPath>(&spec.factor)) return *path;
    const double phi = std::get<Ar1Factor>(spec.factor).persistence;
    auto rng = make_stream(spec.seed, StreamTag::Factor);
    std::normal_distribution<double> normal;
    FactorPath path;
    path.values.reserve(spec.horizon);
    path.values.push_back(normal(rng));
    const double innovation = std::sqrt(1.0 - phi * phi);
    for (std::size_t t = 1; t < spec.horizon; ++t) path.values.push_back(phi * path.values.back() + innovation * normal(rng));
    return path;
}

GeneratedPanel gen_default_panel(const SimulationSpec& spec, const FactorPath& factor, std::uint64_t replication) {
    spec.validate();
    if (factor.size() != spec.horizon) throw DomainError("factor path length does not match the horizon");
    const std::size_t p = spec.true_ttc_pds.size();
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < p; ++i) ids.push_back("P" + std::to_string(i + 1));
    std::vector<int> years;
    for (std::size_t t = 0; t < spec.horizon; ++t) years.push_back(static_cast<int>(t + 1));

    GeneratedPanel out{DefaultRatePanel(std::move(ids), std::move(years)), {}, {}};
    out.true_pit.assign(p, std::vector<double>(spec.horizon));
    for (std::size_t i = 0; i < p; ++i) {
        const double pd = spec.true_ttc_pds[i];
        const double rho = basel_rho(pd, spec.asset_class);
        out.rho.push_back(rho);
        for (std::size_t t = 0; t < spec.horizon; ++t) {
            const double pit = pit_pd(pd, rho, factor.values[t]);
            out.true_pit[i][t] = pit;
            auto rng = make_stream(spec.seed, StreamTag::Defaults, replication, i, t);
            std::binomial_distribution<std::int64_t> binomial(spec.n_obligors, pit);
            const std::int64_t defaults = binomial(rng);
            out.panel.set(i, t, static_cast<double>(defaults) / static_cast<double>(spec.n_obligors), spec.n_obligors);
        }
    }
    if (spec.mask) out.panel.apply_mask(*spec.mask);
    return out;
}

namespace {

void reject_unidentifiable_mask(const SimulationSpec& spec) {
    if (!spec.mask) return;
    std::vector<double> rho;
    for (double p : spec.true_ttc_pds) rho.push_back(basel_rho(p, spec.asset_class));
    const auto report = check_identifiability(*spec.mask, rho);
    if (!report.identifiable) {
        std::vector<std::string> groups;
        for (const auto& c : report.components) groups.push_back(describe(c));
        throw SingularSystem("simulation mask is not identifiable (deficiency " + std::to_string(report.deficiency) +
                                 ")",
                             report.deficiency, std::move(groups));
    }
}

}  // namespace

ExperimentResult run_recovery_experiment(const SimulationSpec& spec, const CalibrationConfig& config) {
    spec.validate();
    reject_unidentifiable_mask(spec);

    ExperimentResult out;
    out.seed = spec.seed;
    out.true_ttc_pds = spec.true_ttc_pds;
    out.true_factor = gen_factor_path(spec);
    out.generated = gen_default_panel(spec, out.true_factor, 0);
    out.true_rho = out.generated.rho;
    auto fit = fit_nonlinear(out.generated.panel, spec.asset_class, config);
    out.fit = std::move(fit.result);
    out.trace = std::move(fit.trace);
    for (std::size_t i = 0; i < spec.true_ttc_pds.size(); ++i) {
        const double err = out.fit.ttc_pd[i] - spec.true_ttc_pds[i];
        out.ttc_errors.push_back(err);
        out.ttc_relative_errors.push_back(err / spec.true_ttc_pds[i]);
    }
    return out;
}

SweepResult run_sample_size_sweep(const SimulationSpec& spec, const std::vector<std::int64_t>& sizes,
                                  std::size_t replications, const CalibrationConfig& config, unsigned threads) {
    spec.validate();
    if (sizes.empty()) throw DomainError("sweep needs at least one sample size");
    if (replications == 0) throw DomainError("sweep needs at least one replication");
    for (auto n : sizes)
        if (n < 1) throw DomainError("sample sizes must be positive");
    reject_unidentifiable_mask(spec);

    SweepResult out;
    out.seed = spec.seed;
    out.true_ttc_pds = spec.true_ttc_pds;
    out.true_factor = gen_factor_path(spec);
    const AssetClassParams asset_class = spec.asset_class;

    const std::size_t total = sizes.size() * replications;
    out.entries.resize(total);
    auto run_one = [&](std::size_t job) {
        const std::size_t s = job / replications;
        const std::size_t r = job % replications;
        SweepEntry& entry = out.entries[job];
        entry.n_obligors = sizes[s];
        entry.replication = r;
        try {
            SimulationSpec local = spec;
            local.n_obligors = sizes[s];
            const auto generated = gen_default_panel(local, out.true_factor, r);
            entry.ttc_estimates = fit_nonlinear(generated.panel, asset_class, config).result.ttc_pd;
            entry.ok = true;
        } catch (const std::exception& e) {
            entry.ok = false;
            entry.error = e.what();
        }
    };

    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(total)));
    if (workers == 1) {
        for (std::size_t job = 0; job < total; ++job) run_one(job);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::jthread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t job = next++; job < total; job = next++) run_one(job);
            });
        }
    }

    const std::size_t p = spec.true_ttc_pds.size();
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        SweepSummary summary{sizes[s], 0, std::vector<double>(p, 0.0), std::vector<double>(p, 0.0),
                             std::vector<double>(p, 0.0)};
        std::vector<const SweepEntry*> ok;
        for (std::size_t r = 0; r < replications; ++r) {
            const auto& e = out.entries[s * replications + r];
            if (e.ok) ok.push_back(&e);
        }
        if (ok.empty()) {
            std::ostringstream msg;
            msg << "every replication failed at sample size " << sizes[s] << ": "
                << out.entries[s * replications].error;
            throw std::runtime_error(msg.str());
        }
        summary.succeeded = ok.size();
        const double n = static_cast<double>(ok.size());
        for (std::size_t i = 0; i < p; ++i) {
            double sum = 0.0, abs_err = 0.0;
            for (const auto* e : ok) {
                sum += e->ttc_estimates[i];
                abs_err += std::fabs(e->ttc_estimates[i] - spec.true_ttc_pds[i]);
            }
            const double mean = sum / n;
            double ss = 0.0;
            for (const auto* e : ok) ss += (e->ttc_estimates[i] - mean) * (e->ttc_estimates[i] - mean);
            summary.mean_estimate[i] = mean;
            summary.stddev_estimate[i] = ok.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
            summary.mean_abs_error[i] = abs_err / n;
        }
        out.summary.push_back(std::move(summary));
    }
    return out;
}

SimulationSpec reference_setup(const FactorPath& factor, std::int64_t n_obligors, std::uint64_t seed) {
    SimulationSpec spec;
    spec.true_ttc_pds = {0.005, 0.017, 0.034, 0.056, 0.07, 0.09};
    spec.horizon = factor.size();
    spec.factor = factor;
    spec.n_obligors = n_obligors;
    spec.asset_class = AssetClassParams::corporate();
    spec.seed = seed;
    return spec;
}

}  // namespace ttcpd
