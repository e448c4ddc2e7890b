#include "ttcpd/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "ttcpd/errors.hpp"

namespace ttcpd::io {

using nlohmann::ordered_json;

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
    throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

double parse_double(const std::string& s, std::size_t line_no, const char* field) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        fail(line_no, std::string("invalid ") + field + " '" + s + "'");
    }
    return v;
}

std::int64_t parse_int(const std::string& s, std::size_t line_no, const char* field) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
        fail(line_no, std::string("invalid ") + field + " '" + s + "'");
    }
    return v;
}

bool skip_line(const std::string& line) {
    const std::string t = trim(line);
    return t.empty() || t.front() == '#';
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write '" + path + "'");
    return out;
}

ordered_json vector_json(const std::vector<double>& v) { return ordered_json(v); }

}  // namespace

std::string format_number(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc()) throw std::runtime_error("format_number: conversion failed");
    return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// panels

DefaultRatePanel read_panel(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (skip_line(line)) continue;
        header = split_csv(line);
        break;
    }
    const bool counts = header == std::vector<std::string>{"portfolio_id", "year", "defaults", "obligors"};
    const bool rates = header == std::vector<std::string>{"portfolio_id", "year", "default_rate"};
    if (!counts && !rates) {
        throw ParseError("expected header 'portfolio_id,year,defaults,obligors' or 'portfolio_id,year,default_rate'");
    }

    struct Row {
        std::string id;
        int year;
        double rate;
        std::optional<std::int64_t> obligors;
        std::size_t line_no;
    };
    std::vector<Row> rows;
    std::vector<std::string> ids;
    std::set<std::pair<std::string, int>> seen;
    while (std::getline(in, line)) {
        ++line_no;
        if (skip_line(line)) continue;
        const auto fields = split_csv(line);
        if (fields.size() != header.size()) {
            fail(line_no, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        }
        Row row{fields[0], 0, 0.0, std::nullopt, line_no};
        if (row.id.empty()) fail(line_no, "empty portfolio_id");
        const auto year = parse_int(fields[1], line_no, "year");
        if (year < -1000000 || year > 1000000) fail(line_no, "year out of range");
        row.year = static_cast<int>(year);
        if (counts) {
            const auto defaults = parse_int(fields[2], line_no, "defaults");
            const auto obligors = parse_int(fields[3], line_no, "obligors");
            if (obligors < 1) fail(line_no, "obligors must be at least 1");
            if (defaults < 0 || defaults > obligors) fail(line_no, "defaults must lie in [0, obligors]");
            row.rate = static_cast<double>(defaults) / static_cast<double>(obligors);
            row.obligors = obligors;
        } else {
            row.rate = parse_double(fields[2], line_no, "default_rate");
            if (!(row.rate >= 0.0 && row.rate <= 1.0)) fail(line_no, "default_rate must lie in [0,1]");
        }
        if (!seen.insert({row.id, row.year}).second) {
            fail(line_no, "duplicate row for portfolio '" + row.id + "' year " + std::to_string(row.year));
        }
        if (std::find(ids.begin(), ids.end(), row.id) == ids.end()) ids.push_back(row.id);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("panel file has no data rows");

    const auto [lo, hi] = std::minmax_element(rows.begin(), rows.end(),
                                              [](const Row& a, const Row& b) { return a.year < b.year; });
    std::vector<int> years;
    for (int y = lo->year; y <= hi->year; ++y) years.push_back(y);
    DefaultRatePanel panel(ids, years);
    const int first_year = lo->year;
    for (const auto& row : rows) {
        const auto i = *panel.portfolio_index(row.id);
        panel.set(i, static_cast<std::size_t>(row.year - first_year), row.rate, row.obligors);
    }
    return panel;
}

DefaultRatePanel read_panel_file(const std::string& path) {
    auto in = open_input(path);
    try {
        return read_panel(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void write_panel(std::ostream& out, const DefaultRatePanel& panel) {
    panel.validate();
    const bool counts = panel.has_obligor_counts();
    out << (counts ? "portfolio_id,year,defaults,obligors\n" : "portfolio_id,year,default_rate\n");
    for (std::size_t i = 0; i < panel.portfolios(); ++i) {
        for (std::size_t t = 0; t < panel.years(); ++t) {
            if (!panel.observed(i, t)) continue;
            out << panel.portfolio_ids()[i] << ',' << panel.year_labels()[t] << ',';
            if (counts) {
                const auto n = *panel.obligors(i, t);
                out << std::llround(panel.rate(i, t) * static_cast<double>(n)) << ',' << n << '\n';
            } else {
                out << format_number(panel.rate(i, t)) << '\n';
            }
        }
    }
}

void write_panel_file(const std::string& path, const DefaultRatePanel& panel) {
    auto out = open_output(path);
    write_panel(out, panel);
}

// ---------------------------------------------------------------------------
// masks and factor paths

AvailabilityMask read_mask(std::istream& in) {
    std::vector<std::vector<bool>> grid;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        const std::string body = trim(line.substr(0, hash));
        if (body.empty()) continue;
        std::vector<bool> row;
        for (char c : body) {
            if (c == 'X' || c == 'x' || c == '1') {
                row.push_back(true);
            } else if (c == '.' || c == '0') {
                row.push_back(false);
            } else if (c != ' ' && c != '\t') {
                fail(line_no, std::string("unexpected mask character '") + c + "'");
            }
        }
        grid.push_back(std::move(row));
    }
    try {
        return AvailabilityMask(std::move(grid));
    } catch (const DomainError& e) {
        throw ParseError(std::string("invalid mask: ") + e.what());
    }
}

AvailabilityMask read_mask_file(const std::string& path) {
    auto in = open_input(path);
    return read_mask(in);
}

void write_mask(std::ostream& out, const AvailabilityMask& mask) {
    for (const auto& row : mask.grid()) {
        for (bool b : row) out << (b ? 'X' : '.');
        out << '\n';
    }
}

FactorPath read_factor_path(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    FactorPath path;
    int previous = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (skip_line(line)) continue;
        const auto fields = split_csv(line);
        if (!header) {
            if (fields != std::vector<std::string>{"year", "f"}) fail(line_no, "expected header 'year,f'");
            header = true;
            continue;
        }
        if (fields.size() != 2) fail(line_no, "expected 2 fields");
        const auto year = static_cast<int>(parse_int(fields[0], line_no, "year"));
        if (!path.values.empty() && year != previous + 1) fail(line_no, "years must be consecutive");
        previous = year;
        path.values.push_back(parse_double(fields[1], line_no, "factor value"));
    }
    if (path.values.empty()) throw ParseError("factor path file has no rows");
    return path;
}

FactorPath read_factor_path_file(const std::string& path) {
    auto in = open_input(path);
    return read_factor_path(in);
}

void write_factor_path(std::ostream& out, const FactorPath& factor) {
    out << "year,f\n";
    for (std::size_t t = 0; t < factor.size(); ++t) out << t + 1 << ',' << format_number(factor.values[t]) << '\n';
}

// ---------------------------------------------------------------------------
// structured results

ordered_json config_to_json(const CalibrationConfig& config) {
    ordered_json j;
    j["alpha_mean"] = config.alpha_mean;
    j["tol"] = config.tol;
    j["max_iter"] = config.max_iter;
    j["clamp_eps"] = config.clamp_eps;
    if (const auto* fixed = std::get_if<FixedRho>(&config.rho_mode)) {
        j["rho_mode"] = {{"type", "fixed"}, {"values", fixed->values}};
    } else {
        const auto& p = std::get<BaselLinked>(config.rho_mode).params;
        j["rho_mode"] = {{"type", "basel"}, {"rho_min", p.rho_min}, {"rho_max", p.rho_max}, {"w", p.w}};
    }
    j["weight_by_obligors"] = config.weight_by_obligors;
    return j;
}

ordered_json report_to_json(const IdentifiabilityReport& report, const DefaultRatePanel& panel) {
    ordered_json j;
    j["identifiable"] = report.identifiable;
    j["numerical_rank"] = report.numerical_rank;
    j["deficiency"] = report.deficiency;
    ordered_json components = ordered_json::array();
    for (const auto& c : report.components) {
        ordered_json item;
        item["portfolios"] = ordered_json::array();
        for (auto i : c.portfolios) item["portfolios"].push_back(panel.portfolio_ids()[i]);
        item["years"] = ordered_json::array();
        for (auto t : c.years) item["years"].push_back(panel.year_labels()[t]);
        item["description"] = describe(c, panel.portfolio_ids(), panel.year_labels());
        components.push_back(std::move(item));
    }
    j["components"] = std::move(components);
    j["unobserved_years"] = ordered_json::array();
    for (auto t : report.unobserved_years) j["unobserved_years"].push_back(panel.year_labels()[t]);
    j["notes"] = report.notes;
    return j;
}

ordered_json trace_to_json(const ConvergenceTrace& trace) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : trace.iterations) {
        arr.push_back({{"max_dk", r.max_dk}, {"max_df", r.max_df}, {"objective", r.objective}});
    }
    return arr;
}

ordered_json result_to_json(const DefaultRatePanel& panel, const CalibrationConfig& config,
                            const CalibrationResult& result, const IdentifiabilityReport& report,
                            const ConvergenceTrace& trace) {
    ordered_json j;
    j["schema"] = "ttcpd.result/1";
    j["config"] = config_to_json(config);
    j["years"] = panel.year_labels();
    ordered_json portfolios = ordered_json::array();
    for (std::size_t i = 0; i < panel.portfolios(); ++i) {
        portfolios.push_back({{"id", panel.portfolio_ids()[i]},
                              {"ttc_pd", result.ttc_pd[i]},
                              {"k", result.k[i]},
                              {"rho", result.rho[i]}});
    }
    j["portfolios"] = std::move(portfolios);
    j["factor"] = vector_json(result.factor.values);
    j["pit_pd"] = result.pit_pd;
    ordered_json residuals = ordered_json::array();
    for (const auto& r : result.residuals) {
        residuals.push_back({{"portfolio_id", panel.portfolio_ids()[r.portfolio]},
                             {"year", panel.year_labels()[r.year]},
                             {"value", r.value}});
    }
    j["residuals"] = std::move(residuals);
    j["objective"] = result.objective();
    j["identifiability"] = report_to_json(report, panel);
    j["convergence"] = {{"iterations", result.iterations}, {"converged", result.converged}, {"trace", trace_to_json(trace)}};
    ordered_json warnings = ordered_json::array();
    for (const auto& w : result.warnings) {
        warnings.push_back({{"portfolio_id", w.portfolio_id},
                            {"year", w.year},
                            {"original", w.original},
                            {"clamped", w.clamped},
                            {"message", w.message()}});
    }
    j["warnings"] = std::move(warnings);
    return j;
}

CalibrationResult result_from_json(const ordered_json& doc) {
    try {
        CalibrationResult r;
        std::map<std::string, std::size_t> index;
        for (const auto& p : doc.at("portfolios")) {
            index[p.at("id").get<std::string>()] = r.k.size();
            r.k.push_back(p.at("k").get<double>());
            r.ttc_pd.push_back(p.at("ttc_pd").get<double>());
            r.rho.push_back(p.at("rho").get<double>());
        }
        const auto years = doc.at("years").get<std::vector<int>>();
        r.factor.values = doc.at("factor").get<std::vector<double>>();
        r.pit_pd = doc.at("pit_pd").get<std::vector<std::vector<double>>>();
        for (const auto& res : doc.at("residuals")) {
            const int year = res.at("year").get<int>();
            const auto t = static_cast<std::size_t>(std::find(years.begin(), years.end(), year) - years.begin());
            r.residuals.push_back({index.at(res.at("portfolio_id").get<std::string>()), t, res.at("value").get<double>()});
        }
        r.iterations = doc.at("convergence").at("iterations").get<int>();
        r.converged = doc.at("convergence").at("converged").get<bool>();
        for (const auto& w : doc.at("warnings")) {
            r.warnings.push_back({w.at("portfolio_id").get<std::string>(), w.at("year").get<int>(),
                                  w.at("original").get<double>(), w.at("clamped").get<double>()});
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed result document: ") + e.what());
    }
}

void write_result_csv(std::ostream& out, const DefaultRatePanel& panel, const CalibrationResult& result) {
    out << "section,portfolio_id,year,field,value\n";
    const auto& ids = panel.portfolio_ids();
    const auto& years = panel.year_labels();
    for (std::size_t i = 0; i < panel.portfolios(); ++i) {
        out << "portfolio," << ids[i] << ",,ttc_pd," << format_number(result.ttc_pd[i]) << '\n';
        out << "portfolio," << ids[i] << ",,k," << format_number(result.k[i]) << '\n';
        out << "portfolio," << ids[i] << ",,rho," << format_number(result.rho[i]) << '\n';
    }
    for (std::size_t t = 0; t < panel.years(); ++t)
        out << "factor,," << years[t] << ",f," << format_number(result.factor.values[t]) << '\n';
    for (std::size_t i = 0; i < panel.portfolios(); ++i)
        for (std::size_t t = 0; t < panel.years(); ++t)
            out << "pit," << ids[i] << ',' << years[t] << ",pit_pd," << format_number(result.pit_pd[i][t]) << '\n';
    for (const auto& r : result.residuals)
        out << "residual," << ids[r.portfolio] << ',' << years[r.year] << ",residual," << format_number(r.value) << '\n';
    for (const auto& w : result.warnings)
        out << "warning," << w.portfolio_id << ',' << w.year << ",clamped," << format_number(w.clamped) << '\n';
}

void write_series_csv(std::ostream& out, const std::vector<SeriesPoint>& points) {
    out << "series,x,y\n";
    for (const auto& p : points) out << p.series << ',' << format_number(p.x) << ',' << format_number(p.y) << '\n';
}

std::vector<SeriesPoint> recovery_series(const ExperimentResult& experiment) {
    std::vector<SeriesPoint> points;
    const auto& panel = experiment.generated.panel;
    for (std::size_t t = 0; t < experiment.true_factor.size(); ++t) {
        const double x = panel.year_labels()[t];
        points.push_back({"factor_true", x, experiment.true_factor.values[t]});
    }
    for (std::size_t t = 0; t < experiment.fit.factor.size(); ++t) {
        points.push_back({"factor_fitted", static_cast<double>(panel.year_labels()[t]), experiment.fit.factor.values[t]});
    }
    for (std::size_t i = 0; i < panel.portfolios(); ++i) {
        const auto& id = panel.portfolio_ids()[i];
        for (std::size_t t = 0; t < panel.years(); ++t) {
            const double x = panel.year_labels()[t];
            points.push_back({"ttc_true:" + id, x, experiment.true_ttc_pds[i]});
            points.push_back({"ttc_fitted:" + id, x, experiment.fit.ttc_pd[i]});
            points.push_back({"pit_true:" + id, x, experiment.generated.true_pit[i][t]});
            points.push_back({"pit_fitted:" + id, x, experiment.fit.pit_pd[i][t]});
            if (panel.observed(i, t)) points.push_back({"observed:" + id, x, panel.rate(i, t)});
        }
    }
    return points;
}

std::vector<SeriesPoint> sweep_series(const SweepResult& sweep) {
    std::vector<SeriesPoint> points;
    const std::size_t p = sweep.true_ttc_pds.size();
    for (std::size_t i = 0; i < p; ++i) {
        const std::string id = "P" + std::to_string(i + 1);
        for (const auto& e : sweep.entries) {
            if (e.ok) points.push_back({"estimate:" + id, static_cast<double>(e.n_obligors), e.ttc_estimates[i]});
        }
        for (const auto& s : sweep.summary) {
            points.push_back({"mean:" + id, static_cast<double>(s.n_obligors), s.mean_estimate[i]});
            points.push_back({"truth:" + id, static_cast<double>(s.n_obligors), sweep.true_ttc_pds[i]});
        }
    }
    return points;
}

ordered_json experiment_to_json(const ExperimentResult& experiment) {
    const auto& panel = experiment.generated.panel;
    ordered_json j;
    j["schema"] = "ttcpd.experiment/1";
    j["seed"] = experiment.seed;
    j["true_ttc_pd"] = experiment.true_ttc_pds;
    j["true_rho"] = experiment.true_rho;
    j["true_factor"] = experiment.true_factor.values;
    j["true_pit_pd"] = experiment.generated.true_pit;
    j["fitted_ttc_pd"] = experiment.fit.ttc_pd;
    j["fitted_rho"] = experiment.fit.rho;
    j["fitted_factor"] = experiment.fit.factor.values;
    j["fitted_pit_pd"] = experiment.fit.pit_pd;
    j["ttc_error"] = experiment.ttc_errors;
    j["ttc_relative_error"] = experiment.ttc_relative_errors;
    j["observed_cells"] = panel.observed_count();
    j["iterations"] = experiment.fit.iterations;
    j["trace"] = trace_to_json(experiment.trace);
    return j;
}

ordered_json sweep_to_json(const SweepResult& sweep) {
    ordered_json j;
    j["schema"] = "ttcpd.sweep/1";
    j["seed"] = sweep.seed;
    j["true_ttc_pd"] = sweep.true_ttc_pds;
    j["true_factor"] = sweep.true_factor.values;
    ordered_json entries = ordered_json::array();
    for (const auto& e : sweep.entries) {
        ordered_json item{{"n_obligors", e.n_obligors}, {"replication", e.replication}, {"ok", e.ok}};
        if (e.ok) {
            item["ttc_pd"] = e.ttc_estimates;
        } else {
            item["error"] = e.error;
        }
        entries.push_back(std::move(item));
    }
    j["entries"] = std::move(entries);
    ordered_json summary = ordered_json::array();
    for (const auto& s : sweep.summary) {
        summary.push_back({{"n_obligors", s.n_obligors},
                           {"succeeded", s.succeeded},
                           {"mean_ttc_pd", s.mean_estimate},
                           {"stddev_ttc_pd", s.stddev_estimate},
                           {"mean_abs_error", s.mean_abs_error}});
    }
    j["summary"] = std::move(summary);
    return j;
}

}  // namespace ttcpd::io
