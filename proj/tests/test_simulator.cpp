#include <gtest/gtest.h>

#include <cmath>

#include "ttcpd/normal.hpp"
#include "ttcpd/errors.hpp"
#include "ttcpd/io.hpp"
#include "ttcpd/simulator.hpp"

namespace ttcpd {
namespace {

FactorPath reference_path() { return io::read_factor_path_file(std::string(TTCPD_DATA_DIR) + "/reference_factor_path.csv"); }

TEST(GenFactorPath, ExplicitPathPassesThrough) {
    const FactorPath path{{0.1, -0.2, 0.3}};
    auto spec = reference_setup(path, 100, 1);
    EXPECT_EQ(gen_factor_path(spec).values, path.values);
}

TEST(GenFactorPath, Ar1WithoutPersistenceIsIid) {
    SimulationSpec spec;
    spec.true_ttc_pds = {0.01};
    spec.horizon = 20000;
    spec.factor = Ar1Factor{0.0};
    spec.seed = 42;
    const auto f = gen_factor_path(spec).values;
    double mean = 0.0, var = 0.0;
    for (double v : f) mean += v;
    mean /= static_cast<double>(f.size());
    for (double v : f) var += (v - mean) * (v - mean);
    var /= static_cast<double>(f.size() - 1);
    EXPECT_NEAR(mean, 0.0, 0.03);
    EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(GenFactorPath, Ar1Autocorrelation) {
    SimulationSpec spec;
    spec.true_ttc_pds = {0.01};
    spec.horizon = 10000;
    spec.factor = Ar1Factor{0.99};
    spec.seed = 7;
    const auto f = gen_factor_path(spec).values;
    double mean = 0.0;
    for (double v : f) mean += v;
    mean /= static_cast<double>(f.size());
    double num = 0.0, den = 0.0;
    for (std::size_t t = 0; t < f.size(); ++t) {
        den += (f[t] - mean) * (f[t] - mean);
        if (t > 0) num += (f[t] - mean) * (f[t - 1] - mean);
    }
    EXPECT_NEAR(num / den, 0.99, 0.02);
}

TEST(GenFactorPath, RejectsInvalidPersistence) {
    SimulationSpec spec;
    spec.true_ttc_pds = {0.01};
    spec.horizon = 10;
    spec.factor = Ar1Factor{1.0};
    EXPECT_THROW(gen_factor_path(spec), DomainError);
}

TEST(GenDefaultPanel, TruthFollowsThePitFormula) {
    const auto path = reference_path();
    const auto spec = reference_setup(path, 1000, 3);
    const auto g = gen_default_panel(spec, path);
    ASSERT_EQ(g.panel.portfolios(), 6u);
    ASSERT_EQ(g.panel.years(), 20u);
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_DOUBLE_EQ(g.rho[i], basel_rho(spec.true_ttc_pds[i], spec.asset_class));
        for (std::size_t t = 0; t < 20; ++t)
            EXPECT_NEAR(g.true_pit[i][t], pit_pd(spec.true_ttc_pds[i], g.rho[i], path.values[t]), 1e-12);
    }
}

TEST(GenDefaultPanel, LargeSampleConvergesToTruth) {
    const auto path = reference_path();
    const auto spec = reference_setup(path, 10'000'000, 9);
    const auto g = gen_default_panel(spec, path);
    double worst = 0.0;
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t t = 0; t < 20; ++t) worst = std::max(worst, std::fabs(g.panel.rate(i, t) - g.true_pit[i][t]));
    EXPECT_LT(worst, 5e-4);
}

TEST(GenDefaultPanel, FlatFactorGivesBinomialNoiseOnly) {
    const FactorPath flat{std::vector<double>(200, 0.0)};
    auto spec = reference_setup(flat, 5000, 11);
    spec.true_ttc_pds = {0.05};
    const auto g = gen_default_panel(spec, flat);
    double mean = 0.0, var = 0.0;
    for (std::size_t t = 0; t < 200; ++t) mean += g.panel.rate(0, t);
    mean /= 200.0;
    for (std::size_t t = 0; t < 200; ++t) var += (g.panel.rate(0, t) - mean) * (g.panel.rate(0, t) - mean);
    var /= 199.0;
    const double pit = norm_cdf(norm_quantile(0.05) / std::sqrt(1.0 - g.rho[0]));
    const double binomial_var = pit * (1.0 - pit) / 5000.0;
    EXPECT_NEAR(g.true_pit[0][0], pit, 1e-12);
    EXPECT_NEAR(mean, pit, 5.0 * std::sqrt(binomial_var / 200.0));
    EXPECT_GT(var / binomial_var, 0.7);
    EXPECT_LT(var / binomial_var, 1.4);
}

TEST(GenDefaultPanel, SeedDeterminesPanel) {
    const auto path = reference_path();
    const auto a = gen_default_panel(reference_setup(path, 10000, 5), path);
    const auto b = gen_default_panel(reference_setup(path, 10000, 5), path);
    const auto c = gen_default_panel(reference_setup(path, 10000, 6), path);
    bool differs = false;
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t t = 0; t < 20; ++t) {
            EXPECT_EQ(a.panel.rate(i, t), b.panel.rate(i, t));
            differs = differs || a.panel.rate(i, t) != c.panel.rate(i, t);
        }
    EXPECT_TRUE(differs);
}

TEST(GenDefaultPanel, MaskDeletesCells) {
    const auto path = reference_path();
    auto spec = reference_setup(path, 10000, 5);
    spec.mask = io::read_mask_file(std::string(TTCPD_DATA_DIR) + "/incomplete_reference.mask");
    const auto g = gen_default_panel(spec, path);
    EXPECT_EQ(g.panel.mask().grid(), spec.mask->grid());
    for (std::size_t i = 0; i < 6; ++i) EXPECT_LT(g.panel.observed_count(i), 20u);
}

TEST(RunRecoveryExperiment, FitsThePaperSetup) {
    const auto path = reference_path();
    const auto result = run_recovery_experiment(reference_setup(path, 100000, 1), CalibrationConfig{});
    for (std::size_t i = 0; i < 6; ++i) EXPECT_LT(std::fabs(result.ttc_relative_errors[i]), 0.05) << i;
    EXPECT_EQ(result.seed, 1u);
}

TEST(RunRecoveryExperiment, RejectsUnidentifiableMask) {
    const auto path = reference_path();
    auto spec = reference_setup(path, 1000, 1);
    std::vector<std::vector<bool>> grid(6, std::vector<bool>(20, false));
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t t = 0; t < 20; ++t) grid[i][t] = (i < 3) == (t < 10);
    spec.mask = AvailabilityMask(grid);
    EXPECT_THROW(run_recovery_experiment(spec, CalibrationConfig{}), SingularSystem);
}

TEST(RunSampleSizeSweep, SingleReplicationMatchesRecovery) {
    const auto path = reference_path();
    const auto spec = reference_setup(path, 20000, 13);
    const auto sweep = run_sample_size_sweep(spec, {20000}, 1, CalibrationConfig{});
    const auto recovery = run_recovery_experiment(spec, CalibrationConfig{});
    ASSERT_EQ(sweep.entries.size(), 1u);
    EXPECT_EQ(sweep.entries[0].ttc_estimates, recovery.fit.ttc_pd);
}

TEST(RunSampleSizeSweep, ParallelEqualsSerial) {
    const auto path = reference_path();
    const auto spec = reference_setup(path, 1, 17);
    const auto serial = run_sample_size_sweep(spec, {2000, 20000}, 3, CalibrationConfig{}, 1);
    const auto parallel = run_sample_size_sweep(spec, {2000, 20000}, 3, CalibrationConfig{}, 4);
    ASSERT_EQ(serial.entries.size(), parallel.entries.size());
    for (std::size_t e = 0; e < serial.entries.size(); ++e) {
        EXPECT_EQ(serial.entries[e].ttc_estimates, parallel.entries[e].ttc_estimates);
    }
    EXPECT_EQ(io::sweep_to_json(serial).dump(), io::sweep_to_json(parallel).dump());
    ASSERT_EQ(serial.summary.size(), 2u);
    EXPECT_EQ(serial.summary[0].succeeded, 3u);
}

TEST(RunSampleSizeSweep, FailsOnlyWhenEveryReplicationFails) {
    const auto path = reference_path();
    const auto spec = reference_setup(path, 1, 17);
    CalibrationConfig impossible;
    impossible.max_iter = 1;
    EXPECT_THROW(run_sample_size_sweep(spec, {5000}, 2, impossible), std::runtime_error);
    EXPECT_THROW(run_sample_size_sweep(spec, {}, 2, CalibrationConfig{}), DomainError);
}

}  // namespace
}  // namespace ttcpd
