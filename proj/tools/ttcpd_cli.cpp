// ttcpd: calibrate through-the-cycle PDs from default-rate panels, check
// identifiability, compute worst-case default rates and run simulation
// experiments.
//
// Exit codes:
//   0  success
//   1  usage error
//   2  input could not be parsed
//   3  panel not identifiable (or a portfolio without observations)
//   4  calibration did not converge
//   5  domain error (value out of range)
//   6  other failure (I/O, internal)

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ttcpd/errors.hpp"
#include "ttcpd/identifiability.hpp"
#include "ttcpd/io.hpp"
#include "ttcpd/linear.hpp"
#include "ttcpd/nonlinear.hpp"
#include "ttcpd/simulator.hpp"

#ifndef TTCPD_DATA_DIR
#define TTCPD_DATA_DIR "data"
#endif

namespace fs = std::filesystem;
using namespace ttcpd;

namespace {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kParse = 2,
    kUnidentifiable = 3,
    kNotConverged = 4,
    kDomain = 5,
    kOther = 6,
};

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ParseError(std::string("invalid ") + what + " '" + text + "'");
        }
    }
    if (values.empty()) throw ParseError(std::string("empty ") + what);
    return values;
}

AssetClassParams parse_asset_class(const std::vector<std::string>& spec) {
    if (spec.empty() || spec[0] == "corporate") return AssetClassParams::corporate();
    if (spec[0] == "retail") return AssetClassParams::retail();
    std::string values;
    if (spec[0] == "custom" && spec.size() == 2) {
        values = spec[1];
    } else if (spec[0].rfind("custom:", 0) == 0) {
        values = spec[0].substr(7);
    } else {
        throw ParseError("--asset-class expects corporate, retail or 'custom rho_min,rho_max,W'");
    }
    const auto v = parse_list(values, "custom asset class");
    if (v.size() != 3) throw ParseError("custom asset class needs rho_min,rho_max,W");
    AssetClassParams p{v[0], v[1], v[2]};
    p.validate();
    return p;
}

std::vector<double> broadcast_rho(const std::vector<double>& rho, std::size_t portfolios) {
    if (rho.size() == 1) return std::vector<double>(portfolios, rho[0]);
    if (rho.size() != portfolios) {
        throw ParseError("--fixed-rho needs 1 or " + std::to_string(portfolios) + " values, got " +
                         std::to_string(rho.size()));
    }
    return rho;
}

std::string default_output(const std::string& explicit_path, const std::string& file_name) {
    if (!explicit_path.empty()) return explicit_path;
    if (const char* dir = std::getenv("TTCPD_OUTPUT_DIR"); dir && *dir) return (fs::path(dir) / file_name).string();
    return {};
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << text;
}

void print_groups(const SingularSystem& e) {
    for (const auto& g : e.groups()) std::cerr << "  component: " << g << '\n';
}

struct CalibrationFlags {
    std::vector<std::string> asset_class;
    std::string fixed_rho;
    double alpha = 0.0;
    double tol = 1e-8;
    int max_iter = 100;
    double clamp_eps = 1e-6;
    bool weight_by_obligors = false;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--asset-class", asset_class, "corporate | retail | custom rho_min,rho_max,W")
            ->expected(1, 2);
        cmd->add_option("--fixed-rho", fixed_rho, "comma separated correlations (selects the linear model)");
        cmd->add_option("--alpha", alpha, "target time-mean of the factor path")->capture_default_str();
        cmd->add_option("--tol", tol, "convergence tolerance")->capture_default_str();
        cmd->add_option("--max-iter", max_iter, "maximum outer iterations")->capture_default_str();
        cmd->add_option("--clamp-eps", clamp_eps, "floor for degenerate rates without obligor counts")
            ->capture_default_str();
        cmd->add_flag("--weight-by-obligors", weight_by_obligors, "weight cells by obligor count");
    }

    CalibrationConfig config(std::size_t portfolios) const {
        CalibrationConfig c;
        c.alpha_mean = alpha;
        c.tol = tol;
        c.max_iter = max_iter;
        c.clamp_eps = clamp_eps;
        c.weight_by_obligors = weight_by_obligors;
        if (!fixed_rho.empty()) {
            if (!asset_class.empty()) throw ParseError("--fixed-rho and --asset-class are mutually exclusive");
            c.rho_mode = FixedRho{broadcast_rho(parse_list(fixed_rho, "--fixed-rho"), portfolios)};
        } else {
            c.rho_mode = BaselLinked{parse_asset_class(asset_class)};
        }
        c.validate();
        return c;
    }
};

// Correlations used for the rank test before anything is fitted.
std::vector<double> screening_rho(const DefaultRatePanel& panel, const CalibrationConfig& config) {
    if (const auto* fixed = std::get_if<FixedRho>(&config.rho_mode)) return fixed->values;
    const auto& params = std::get<BaselLinked>(config.rho_mode).params;
    return std::vector<double>(panel.portfolios(), params.rho_max);
}

struct SimulationFlags {
    bool reference_setup = false;
    std::string pds;
    std::string factor_file;
    double ar1 = std::numeric_limits<double>::quiet_NaN();
    std::size_t horizon = 20;
    std::int64_t n = 10000;
    std::vector<std::string> asset_class;
    std::string mask_file;
    std::uint64_t seed = 0;

    void add_to(CLI::App* cmd, bool seed_required) {
        cmd->add_flag("--reference-setup", reference_setup, "six corporate portfolios over the reference factor path");
        cmd->add_option("--pds", pds, "comma separated true TTC PDs");
        cmd->add_option("--factor-file", factor_file, "factor path CSV (year,f)");
        cmd->add_option("--ar1", ar1, "generate the factor from an AR(1) with this persistence");
        cmd->add_option("--horizon", horizon, "years (AR(1) factor only)")->capture_default_str();
        cmd->add_option("--n", n, "obligors per portfolio and year")->capture_default_str();
        cmd->add_option("--asset-class", asset_class, "corporate | retail | custom rho_min,rho_max,W")
            ->expected(1, 2);
        cmd->add_option("--mask", mask_file, "availability mask file");
        auto* seed_opt = cmd->add_option("--seed", seed, "64-bit master seed");
        if (seed_required) seed_opt->required();
    }

    SimulationSpec spec() const {
        FactorSpec factor;
        if (!std::isnan(ar1)) {
            if (!factor_file.empty()) throw ParseError("--ar1 and --factor-file are mutually exclusive");
            factor = Ar1Factor{ar1};
        } else {
            const std::string path =
                factor_file.empty() ? (fs::path(TTCPD_DATA_DIR) / "reference_factor_path.csv").string() : factor_file;
            factor = io::read_factor_path_file(path);
        }
        SimulationSpec s;
        if (reference_setup || pds.empty()) {
            s.true_ttc_pds = {0.005, 0.017, 0.034, 0.056, 0.07, 0.09};
        } else {
            s.true_ttc_pds = parse_list(pds, "--pds");
        }
        s.factor = factor;
        s.horizon = std::holds_alternative<FactorPath>(factor) ? std::get<FactorPath>(factor).size() : horizon;
        s.n_obligors = n;
        s.asset_class = parse_asset_class(asset_class);
        s.seed = seed;
        if (!mask_file.empty()) s.mask = io::read_mask_file(mask_file);
        s.validate();
        return s;
    }
};

nlohmann::ordered_json truth_json(const SimulationSpec& spec, const FactorPath& factor, const GeneratedPanel& g) {
    nlohmann::ordered_json j;
    j["schema"] = "ttcpd.truth/1";
    j["seed"] = spec.seed;
    j["n_obligors"] = spec.n_obligors;
    j["asset_class"] = {{"rho_min", spec.asset_class.rho_min}, {"rho_max", spec.asset_class.rho_max},
                        {"w", spec.asset_class.w}};
    j["portfolio_ids"] = g.panel.portfolio_ids();
    j["true_ttc_pd"] = spec.true_ttc_pds;
    j["rho"] = g.rho;
    j["factor"] = factor.values;
    j["true_pit_pd"] = g.true_pit;
    return j;
}

int run(int argc, char** argv) {
    CLI::App app{"Through-the-cycle PD calibration with the dynamic Vasicek model"};
    app.require_subcommand(1);

    // calibrate
    auto* calibrate_cmd = app.add_subcommand("calibrate", "fit TTC PDs, factor path and PIT PDs to a panel");
    std::string input;
    std::string output;
    std::string format = "json";
    bool verbose = false;
    CalibrationFlags cal;
    calibrate_cmd->add_option("input", input, "panel CSV")->required();
    cal.add_to(calibrate_cmd);
    calibrate_cmd->add_option("--output,-o", output, "result path (default stdout or $TTCPD_OUTPUT_DIR)");
    calibrate_cmd->add_option("--format", format, "json | csv")->check(CLI::IsMember({"json", "csv"}));
    calibrate_cmd->add_flag("--verbose,-v", verbose, "print the convergence trace to stderr");

    // check
    auto* check_cmd = app.add_subcommand("check", "identifiability report for a panel");
    std::string check_input;
    CalibrationFlags check_flags;
    check_cmd->add_option("input", check_input, "panel CSV")->required();
    check_cmd->add_option("--asset-class", check_flags.asset_class, "corporate | retail | custom rho_min,rho_max,W")
        ->expected(1, 2);
    check_cmd->add_option("--fixed-rho", check_flags.fixed_rho, "comma separated correlations");

    // wcdr
    auto* wcdr_cmd = app.add_subcommand("wcdr", "worst-case default rate");
    double pd = 0.0;
    double rho_value = std::numeric_limits<double>::quiet_NaN();
    double confidence = 0.999;
    std::vector<std::string> wcdr_class;
    wcdr_cmd->add_option("--pd", pd, "TTC PD")->required();
    auto* rho_opt = wcdr_cmd->add_option("--rho", rho_value, "asset correlation");
    auto* class_opt =
        wcdr_cmd->add_option("--asset-class", wcdr_class, "derive rho: corporate | retail | custom ...")->expected(1, 2);
    rho_opt->excludes(class_opt);
    wcdr_cmd->add_option("--confidence", confidence, "confidence level")->capture_default_str();

    // simulate
    auto* simulate_cmd = app.add_subcommand("simulate", "generate a synthetic default panel");
    SimulationFlags sim;
    std::string sim_output;
    std::string truth_output;
    sim.add_to(simulate_cmd, true);
    simulate_cmd->add_option("--output,-o", sim_output, "panel CSV path (default stdout or $TTCPD_OUTPUT_DIR)");
    simulate_cmd->add_option("--truth", truth_output, "truth sidecar JSON path");

    // experiment
    auto* experiment_cmd = app.add_subcommand("experiment", "simulation studies");
    experiment_cmd->require_subcommand(1);
    auto* recovery_cmd = experiment_cmd->add_subcommand("recovery", "simulate one panel, calibrate, score");
    auto* sweep_cmd = experiment_cmd->add_subcommand("sweep", "estimates as a function of sample size");
    SimulationFlags exp;
    CalibrationFlags exp_cal;
    std::string out_dir;
    std::string sizes_text = "1000,3162,10000,31623,100000";
    std::size_t replications = 20;
    unsigned threads = 1;
    for (auto* cmd : {recovery_cmd, sweep_cmd}) {
        exp.add_to(cmd, false);
        cmd->add_option("--alpha", exp_cal.alpha, "target time-mean of the factor path");
        cmd->add_option("--tol", exp_cal.tol, "convergence tolerance");
        cmd->add_option("--max-iter", exp_cal.max_iter, "maximum outer iterations");
        cmd->add_option("--output-dir", out_dir, "directory for result files (default $TTCPD_OUTPUT_DIR or .)");
    }
    sweep_cmd->add_option("--sizes", sizes_text, "comma separated sample sizes")->capture_default_str();
    sweep_cmd->add_option("--replications", replications, "replications per size")->capture_default_str();
    sweep_cmd->add_option("--threads", threads, "worker threads")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*calibrate_cmd) {
            const DefaultRatePanel panel = io::read_panel_file(input);
            const CalibrationConfig config = cal.config(panel.portfolios());
            const auto report = check_identifiability(panel.mask(), screening_rho(panel, config));
            for (const auto& note : report.notes) std::cerr << "note: " << note << '\n';
            if (!report.identifiable) {
                std::cerr << "error: panel is not identifiable (rank " << report.numerical_rank << ", deficiency "
                          << report.deficiency << ")\n";
                for (const auto& c : report.components)
                    std::cerr << "  component: " << describe(c, panel.portfolio_ids(), panel.year_labels()) << '\n';
                return kUnidentifiable;
            }
            const NonlinearFit fit = calibrate(panel, config);
            for (const auto& w : fit.result.warnings) std::cerr << "warning: " << w.message() << '\n';
            if (verbose) std::cerr << io::trace_to_json(fit.trace).dump(2) << '\n';
            std::ostringstream text;
            if (format == "json") {
                text << io::result_to_json(panel, config, fit.result, report, fit.trace).dump(2) << '\n';
            } else {
                io::write_result_csv(text, panel, fit.result);
            }
            const std::string stem = fs::path(input).stem().string();
            write_text(default_output(output, stem + ".result." + format), text.str());
            return kOk;
        }
        if (*check_cmd) {
            const DefaultRatePanel panel = io::read_panel_file(check_input);
            const CalibrationConfig config = check_flags.config(panel.portfolios());
            const auto report = check_identifiability(panel.mask(), screening_rho(panel, config));
            std::cout << io::report_to_json(report, panel).dump(2) << '\n';
            if (!report.identifiable) {
                std::cerr << "panel is not identifiable (deficiency " << report.deficiency << ")\n";
                for (const auto& c : report.components)
                    std::cerr << "  component: " << describe(c, panel.portfolio_ids(), panel.year_labels()) << '\n';
                return kUnidentifiable;
            }
            return kOk;
        }
        if (*wcdr_cmd) {
            std::cout << std::setprecision(12);
            double rho = rho_value;
            if (std::isnan(rho)) {
                const auto params = parse_asset_class(wcdr_class);
                rho = basel_rho(pd, params);
                std::cout << "rho " << rho << '\n';
            }
            std::cout << "wcdr " << wcdr(pd, rho, confidence) << '\n';
            return kOk;
        }
        if (*simulate_cmd) {
            const SimulationSpec spec = sim.spec();
            const FactorPath factor = gen_factor_path(spec);
            const GeneratedPanel generated = gen_default_panel(spec, factor, 0);
            std::ostringstream panel_text;
            io::write_panel(panel_text, generated.panel);
            write_text(default_output(sim_output, "panel.csv"), panel_text.str());
            if (!truth_output.empty()) {
                write_text(truth_output, truth_json(spec, factor, generated).dump(2) + "\n");
            }
            return kOk;
        }
        if (*experiment_cmd) {
            const SimulationSpec spec = exp.spec();
            CalibrationConfig config;
            config.alpha_mean = exp_cal.alpha;
            config.tol = exp_cal.tol;
            config.max_iter = exp_cal.max_iter;
            config.rho_mode = BaselLinked{spec.asset_class};
            config.validate();
            std::string dir = out_dir;
            if (dir.empty()) {
                const char* env = std::getenv("TTCPD_OUTPUT_DIR");
                dir = env && *env ? env : ".";
            }
            if (*recovery_cmd) {
                const ExperimentResult result = run_recovery_experiment(spec, config);
                write_text((fs::path(dir) / "recovery.json").string(), io::experiment_to_json(result).dump(2) + "\n");
                std::ostringstream series;
                io::write_series_csv(series, io::recovery_series(result));
                write_text((fs::path(dir) / "recovery_series.csv").string(), series.str());
                std::ostringstream panel_text;
                io::write_panel(panel_text, result.generated.panel);
                write_text((fs::path(dir) / "recovery_panel.csv").string(), panel_text.str());
                std::cout << std::setprecision(6);
                for (std::size_t i = 0; i < result.true_ttc_pds.size(); ++i) {
                    std::cout << result.generated.panel.portfolio_ids()[i] << "  true " << result.true_ttc_pds[i]
                              << "  fitted " << result.fit.ttc_pd[i] << "  rel.err " << result.ttc_relative_errors[i]
                              << '\n';
                }
            } else {
                std::vector<std::int64_t> sizes;
                for (double v : parse_list(sizes_text, "--sizes")) {
                    if (v < 1 || v != std::floor(v)) throw ParseError("--sizes must be positive integers");
                    sizes.push_back(static_cast<std::int64_t>(v));
                }
                const SweepResult result = run_sample_size_sweep(spec, sizes, replications, config, threads);
                write_text((fs::path(dir) / "sweep.json").string(), io::sweep_to_json(result).dump(2) + "\n");
                std::ostringstream series;
                io::write_series_csv(series, io::sweep_series(result));
                write_text((fs::path(dir) / "sweep_series.csv").string(), series.str());
                std::cout << std::setprecision(6);
                for (const auto& s : result.summary) {
                    std::cout << "n=" << s.n_obligors << " ok=" << s.succeeded << " mean:";
                    for (double m : s.mean_estimate) std::cout << ' ' << m;
                    std::cout << '\n';
                }
            }
            return kOk;
        }
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kParse;
    } catch (const SingularSystem& e) {
        std::cerr << "error: " << e.what() << '\n';
        print_groups(e);
        return kUnidentifiable;
    } catch (const EmptyPortfolio& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUnidentifiable;
    } catch (const NotConverged& e) {
        std::cerr << "error: " << e.what() << '\n';
        std::cerr << io::trace_to_json(e.trace()).dump(2) << '\n';
        return kNotConverged;
    } catch (const DomainError& e) {
        std::cerr << "domain error: " << e.what() << '\n';
        return kDomain;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kOther;
    }
    return kUsage;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
