#include "gfa/io.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gfa/field.hpp"
#include "gfa/stationary.hpp"

namespace gfa {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok)
        out.push_back(tok);
    return out;
}

double parse_double(const std::string& tok, Index row, Index col) {
    double value = 0.0;
    const char* begin = tok.data();
    const char* end = begin + tok.size();
    const auto res = std::from_chars(begin, end, value);
    if (res.ec != std::errc() || res.ptr != end)
        throw ParseError("non-numeric cell '" + tok + "' at row " + std::to_string(row) +
                             ", column " + std::to_string(col),
                         row, col);
    return value;
}

json vector_to_json(const Vector& v) {
    json arr = json::array();
    for (Index i = 0; i < v.size(); ++i)
        arr.push_back(v[i]);
    return arr;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i)
        rows.push_back(vector_to_json(m.row(i).transpose()));
    return rows;
}

json growth_to_json(const GrowthReport& g) {
    json entries = json::array();
    for (const auto& e : g.entries) {
        entries.push_back({{"k", e.index},
                           {"ratios", e.ratios},
                           {"mean_ratio", e.mean_ratio},
                           {"lambda_at_max", e.value_at_max},
                           {"class", e.cls == GrowthClass::Diverging ? "DIVERGING" : "BOUNDED"}});
    }
    return {{"q", g.q},
            {"ambiguous", g.ambiguous},
            {"gamma", g.gamma},
            {"tau_multiplier", g.tau_multiplier},
            {"tau", g.tau},
            {"trailing_median", g.trailing_median},
            {"eigenvalues", entries}};
}

json lines_to_json(const PDLineModel& model) {
    json lines = json::array();
    for (const auto& line : model.lines) {
        json entry = {{"omega", line.omega}};
        if (line.v.size() == 1)
            entry["v"] = line.v[0];
        else
            entry["v"] = vector_to_json(line.v);
        if (line.w.size() == 1)
            entry["w"] = line.w[0];
        else if (line.w.size() > 1)
            entry["w"] = vector_to_json(line.w);
        lines.push_back(std::move(entry));
    }
    return {{"lines", std::move(lines)}, {"nu", model.nu()}};
}

// Eigenvalue-vs-n curves, plot-ready: n, k, lambda, ratio into this grid
// point, growth class.
void write_curves_csv(const std::string& path, const EigenProfile& profile,
                      const GrowthReport& growth) {
    std::ofstream out(path);
    out << "n,k,lambda,ratio,class\n";
    char buf[64];
    for (std::size_t g = 0; g < profile.grid.size(); ++g) {
        for (Index k = 0; k < profile.values.cols(); ++k) {
            const auto& entry = growth.entries[static_cast<std::size_t>(k)];
            const double ratio = g == 0 ? 1.0 : entry.ratios[g - 1];
            std::snprintf(buf, sizeof buf, "%.17g", profile.values(static_cast<Index>(g), k));
            out << profile.grid[g] << ',' << (k + 1) << ',' << buf << ',';
            std::snprintf(buf, sizeof buf, "%.17g", ratio);
            out << buf << ','
                << (entry.cls == GrowthClass::Diverging ? "DIVERGING" : "BOUNDED") << '\n';
        }
    }
}

void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2) << '\n';
}

json flags_to_json(const DecomposeFlags& flags, const std::vector<Index>& grid_used) {
    return {{"grid", grid_used},
            {"top_m", flags.top_m},
            {"gamma", flags.gamma},
            {"tau", flags.tau},
            {"header", flags.header}};
}

}  // namespace

Matrix read_csv_matrix(const std::string& path, bool skip_header) {
    std::ifstream in(path);
    if (!in)
        throw ParseError("cannot open '" + path + "'");

    std::vector<std::vector<double>> rows;
    std::string line;
    Index lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (skip_header && lineno == 1)
            continue;
        const std::string t = trim(line);
        if (t.empty())
            continue;
        std::vector<double> row;
        std::size_t start = 0;
        Index col = 0;
        while (start <= t.size()) {
            const std::size_t comma = t.find(',', start);
            const std::string cell =
                trim(t.substr(start, comma == std::string::npos ? std::string::npos
                                                                : comma - start));
            ++col;
            if (cell.empty())
                throw ParseError("empty cell at row " + std::to_string(lineno) + ", column " +
                                     std::to_string(col),
                                 lineno, col);
            row.push_back(parse_double(cell, lineno, col));
            if (comma == std::string::npos)
                break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("row " + std::to_string(lineno) + " has " +
                                 std::to_string(row.size()) + " cells, expected " +
                                 std::to_string(rows.front().size()),
                             lineno, 0);
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw ParseError("'" + path + "' contains no data");

    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j)
            m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    return m;
}

void write_csv_matrix(const std::string& path, const Matrix& m, bool header) {
    std::ofstream out(path);
    if (!out)
        throw ParseError("cannot open '" + path + "' for writing");
    if (header) {
        for (Index j = 0; j < m.cols(); ++j)
            out << (j ? "," : "") << 'c' << (j + 1);
        out << '\n';
    }
    char buf[64];
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
            out << (j ? "," : "") << buf;
        }
        out << '\n';
    }
}

namespace {

LoadingSpec parse_loading(const std::vector<std::string>& toks, Index lineno) {
    if (toks.empty())
        throw ConfigError("loading needs a family name at line " + std::to_string(lineno),
                          "loading", lineno);
    const std::string& fam = toks[0];
    auto arg = [&](std::size_t i, double fallback) {
        return toks.size() > i ? std::stod(toks[i]) : fallback;
    };
    if (fam == "constant")
        return LoadingSpec::constant(arg(1, 1.0));
    if (fam == "sign_pattern")
        return LoadingSpec::sign_pattern(static_cast<Index>(arg(1, 2.0)));
    if (fam == "cosine")
        return LoadingSpec::cosine(arg(1, 1.0));
    if (fam == "geometric")
        return LoadingSpec::geometric(arg(1, 0.5));
    if (fam == "one_minus_geometric")
        return LoadingSpec::one_minus_geometric(arg(1, 0.5));
    throw ConfigError("unknown loading family '" + fam + "' at line " + std::to_string(lineno),
                      "loading", lineno);
}

NoiseSpec parse_noise(const std::vector<std::string>& toks, Index lineno) {
    if (toks.empty())
        throw ConfigError("noise needs a kind at line " + std::to_string(lineno), "noise",
                          lineno);
    const std::string& kind = toks[0];
    if (kind == "white")
        return NoiseSpec::white(toks.size() > 1 ? std::stod(toks[1]) : 1.0);
    if (kind == "white_growing")
        return NoiseSpec::white_growing();
    if (kind == "ma") {
        Vector coeffs(static_cast<Index>(toks.size()) - 1);
        for (std::size_t i = 1; i < toks.size(); ++i)
            coeffs[static_cast<Index>(i - 1)] = std::stod(toks[i]);
        return NoiseSpec::moving_average(std::move(coeffs));
    }
    if (kind == "banded")
        return NoiseSpec::banded(toks.size() > 1 ? static_cast<Index>(std::stod(toks[1])) : 2,
                                 toks.size() > 2 ? std::stod(toks[2]) : 0.5);
    throw ConfigError("unknown noise kind '" + kind + "' at line " + std::to_string(lineno),
                      "noise", lineno);
}

TimeSpec parse_time(const std::vector<std::string>& toks, Index lineno) {
    if (toks.empty())
        throw ConfigError("time needs a kind at line " + std::to_string(lineno), "time", lineno);
    const std::string& kind = toks[0];
    if (kind == "iid")
        return TimeSpec::iid();
    if (kind == "ar1")
        return TimeSpec::ar1(toks.size() > 1 ? std::stod(toks[1]) : 0.9);
    if (kind == "sinusoid")
        return TimeSpec::sinusoid(toks.size() > 1 ? std::stod(toks[1]) : 1.0);
    throw ConfigError("unknown time kind '" + kind + "' at line " + std::to_string(lineno),
                      "time", lineno);
}

}  // namespace

ScenarioConfig parse_scenario_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open '" + path + "'", "", 0);

    ScenarioConfig cfg;
    std::string line;
    Index lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        const std::string t = trim(line);
        if (t.empty())
            continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value' at line " + std::to_string(lineno), t,
                              lineno);
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        const auto toks = split_ws(value);
        try {
            if (key == "scenario") {
                if (value == "aggregate")
                    cfg.kind = ScenarioConfig::Kind::Aggregate;
                else if (value == "idiosyncratic")
                    cfg.kind = ScenarioConfig::Kind::Idiosyncratic;
                else if (value == "pd")
                    cfg.kind = ScenarioConfig::Kind::Pd;
                else if (value == "field")
                    cfg.kind = ScenarioConfig::Kind::Field;
                else
                    throw ConfigError("unknown scenario '" + value + "' at line " +
                                          std::to_string(lineno),
                                      key, lineno);
            } else if (key == "n") {
                cfg.n = static_cast<Index>(std::stoll(value));
            } else if (key == "m") {
                cfg.m = static_cast<Index>(std::stoll(value));
            } else if (key == "t") {
                cfg.t = static_cast<Index>(std::stoll(value));
            } else if (key == "seed") {
                cfg.seed = std::stoull(value);
            } else if (key == "loading") {
                cfg.loadings.push_back(parse_loading(toks, lineno));
            } else if (key == "noise") {
                cfg.noise = parse_noise(toks, lineno);
            } else if (key == "line") {
                if (toks.size() < 1)
                    throw ConfigError("line needs a frequency at line " + std::to_string(lineno),
                                      key, lineno);
                PDLine l;
                l.omega = std::stod(toks[0]);
                l.amplitude_var = toks.size() > 1 ? std::stod(toks[1]) : 1.0;
                cfg.lines.push_back(l);
            } else if (key == "time") {
                cfg.time = parse_time(toks, lineno);
            } else {
                throw ConfigError("unknown key '" + key + "' at line " + std::to_string(lineno),
                                  key, lineno);
            }
        } catch (const std::invalid_argument&) {
            throw ConfigError("bad value for '" + key + "' at line " + std::to_string(lineno),
                              key, lineno);
        } catch (const std::out_of_range&) {
            throw ConfigError("value out of range for '" + key + "' at line " +
                                  std::to_string(lineno),
                              key, lineno);
        }
    }
    return cfg;
}

std::string run_synth(const std::string& config_path, const std::string& out_dir,
                      std::optional<std::uint64_t> seed_override) {
    ScenarioConfig cfg = parse_scenario_file(config_path);
    if (seed_override)
        cfg.seed = *seed_override;
    std::filesystem::create_directories(out_dir);
    const std::string data_path = out_dir + "/ensemble.csv";
    const std::string truth_path = out_dir + "/truth.json";

    json truth = {{"seed", cfg.seed}, {"n", cfg.n}};
    switch (cfg.kind) {
        case ScenarioConfig::Kind::Aggregate: {
            auto sample = gen_aggregate(cfg.loadings, cfg.n, cfg.m, cfg.seed);
            if (cfg.noise) {
                const SampleEnsemble noise =
                    gen_idiosyncratic(*cfg.noise, cfg.n, cfg.m, cfg.seed);
                sample.ensemble.data += noise.data;
            }
            write_csv_matrix(data_path, sample.ensemble.data);
            truth["scenario"] = "aggregate";
            truth["m"] = cfg.m;
            json loadings = json::array();
            for (const auto& s : cfg.loadings)
                loadings.push_back({{"family", s.description()},
                                    {"profile", vector_to_json(s.materialize(cfg.n))}});
            truth["loadings"] = std::move(loadings);
            truth["factors"] = matrix_to_json(sample.factors);
            if (cfg.noise)
                truth["noise"] = cfg.noise->description();
            break;
        }
        case ScenarioConfig::Kind::Idiosyncratic: {
            if (!cfg.noise)
                throw ConfigError("idiosyncratic scenario needs a noise spec", "noise", 0);
            const SampleEnsemble noise = gen_idiosyncratic(*cfg.noise, cfg.n, cfg.m, cfg.seed);
            write_csv_matrix(data_path, noise.data);
            truth["scenario"] = "idiosyncratic";
            truth["m"] = cfg.m;
            truth["noise"] = cfg.noise->description();
            break;
        }
        case ScenarioConfig::Kind::Pd: {
            auto sample = gen_pd_stationary(cfg.lines, cfg.n, cfg.m, cfg.seed);
            if (cfg.noise) {
                const SampleEnsemble noise =
                    gen_idiosyncratic(*cfg.noise, cfg.n, cfg.m, cfg.seed);
                sample.ensemble.data += noise.data;
            }
            write_csv_matrix(data_path, sample.ensemble.data);
            truth["scenario"] = "pd";
            truth["m"] = cfg.m;
            truth["truth"] = lines_to_json(sample.truth);
            if (cfg.noise)
                truth["noise"] = cfg.noise->description();
            break;
        }
        case ScenarioConfig::Kind::Field: {
            auto sample =
                gen_separable_field(cfg.loadings, cfg.noise, cfg.time, cfg.n, cfg.t, cfg.seed);
            write_csv_matrix(data_path, sample.field.data);
            truth["scenario"] = "field";
            truth["t"] = cfg.t;
            truth["time"] = cfg.time.description();
            truth["space_component"] = vector_to_json(sample.space_component);
            truth["time_component"] = vector_to_json(sample.time_component);
            truth["space_factors"] = vector_to_json(sample.space_factors);
            break;
        }
    }
    write_json_file(truth_path, truth);
    return truth_path;
}

std::string run_decompose(const std::string& input_csv, const std::string& out_dir,
                          const DecomposeFlags& flags) {
    const Matrix data = read_csv_matrix(input_csv, flags.header);
    const SampleEnsemble ensemble(data, EnsembleKind::Replicates);
    std::filesystem::create_directories(out_dir);

    const std::vector<Index> grid =
        flags.grid.empty() ? default_grid(ensemble.size(), flags.grid_points) : flags.grid;
    const int top_m = static_cast<int>(std::min<Index>(flags.top_m, grid.front()));
    const DetectionParams params{flags.gamma, flags.tau};

    const CovarianceSupplier supplier = sample_covariance_supplier(ensemble);
    const EigenProfile profile = eigen_profile(supplier, grid, top_m);
    const GrowthReport growth = detect_factor_count(profile, params);

    write_curves_csv(out_dir + "/curves.csv", profile, growth);

    json report = {{"input", input_csv},
                   {"flags", flags_to_json(flags, grid)},
                   {"growth", growth_to_json(growth)},
                   {"q", growth.q}};

    if (growth.q > 0) {
        const Matrix sigma = supplier.eval(grid.back());
        const Matrix loadings = extract_loadings(sigma, growth.q);
        write_csv_matrix(out_dir + "/loadings.csv", loadings);
        const AveragingOperator ops = build_averaging_sequences(loadings);
        if (ensemble.replicates() >= growth.q) {
            const FactorRealization real = realize_factors(ensemble, loadings, ops);
            write_csv_matrix(out_dir + "/factors.csv", real.factors);
            report["factors_file"] = out_dir + "/factors.csv";
        }
        report["loadings_file"] = out_dir + "/loadings.csv";

        std::vector<Matrix> per_grid;
        for (std::size_t g = 0; g < profile.grid.size(); ++g) {
            const Vector lam = profile.values.row(static_cast<Index>(g)).head(growth.q);
            per_grid.push_back(profile.vectors[g].leftCols(growth.q) *
                               lam.cwiseMax(0.0).cwiseSqrt().asDiagonal());
        }
        const StrongLiReport sli = strong_li_diagnostic(per_grid);
        report["strong_li"] = {
            {"verdict", sli.verdict == StrongLiVerdict::Strong ? "STRONG" : "WEAK"},
            {"growth_rates", sli.growth_rates},
            {"collinear", sli.collinear}};
    }

    const std::string report_path = out_dir + "/report.json";
    write_json_file(report_path, report);
    return report_path;
}

std::string run_stationary(const std::string& input_csv, const std::string& out_dir,
                           const StationaryFlags& flags) {
    const Matrix data = read_csv_matrix(input_csv, flags.header);
    Vector series;
    if (data.rows() == 1)
        series = data.row(0).transpose();
    else if (data.cols() == 1)
        series = data.col(0);
    else
        throw ArgumentError("stationary analysis expects a single row or column series");

    std::filesystem::create_directories(out_dir);
    const std::vector<double> lines = detect_lines(series, flags.max_lines, flags.threshold);
    const WoldSplit split = wold_split(series, lines, flags.threshold);

    write_csv_matrix(out_dir + "/pd.csv", split.pd.transpose());
    write_csv_matrix(out_dir + "/pnd.csv", split.pnd.transpose());

    json report = lines_to_json(split.model);
    report["flags"] = {{"max_lines", flags.max_lines},
                       {"threshold", flags.threshold},
                       {"header", flags.header}};
    report["incomplete_split"] = split.incomplete;
    const std::string report_path = out_dir + "/lines.json";
    write_json_file(report_path, report);
    return report_path;
}

std::string run_flock(const std::string& input_csv, const std::string& out_dir,
                      const DecomposeFlags& flags) {
    const Matrix data = read_csv_matrix(input_csv, flags.header);
    const SeparableField field(data);
    std::filesystem::create_directories(out_dir);

    const std::vector<Index> grid_used =
        flags.grid.empty() ? default_grid(field.space_size(), flags.grid_points) : flags.grid;
    FlockParams params;
    params.grid = grid_used;
    params.grid_points = flags.grid_points;
    params.top_m = flags.top_m;
    params.detection = DetectionParams{flags.gamma, flags.tau};
    const FlockExtraction result = extract_flock(field, params);
    const double defect = separability_check(
        field, std::min<Index>(10, field.space_size()), std::min<Index>(10, field.time_size()));

    write_csv_matrix(out_dir + "/flock.csv", result.flock);
    write_csv_matrix(out_dir + "/residual.csv", result.residual);
    if (result.q > 0) {
        write_csv_matrix(out_dir + "/loadings.csv", result.loadings);
        write_csv_matrix(out_dir + "/factors.csv", result.factors);
    }

    json report = {{"input", input_csv},
                   {"flags", flags_to_json(flags, grid_used)},
                   {"q", result.q},
                   {"verdict", result.verdict == FlockVerdict::Flock ? "FLOCK" : "NO-FLOCK"},
                   {"defect", defect},
                   {"growth", growth_to_json(result.growth)},
                   {"loadings_file", result.q > 0 ? out_dir + "/loadings.csv" : ""},
                   {"factors_file", result.q > 0 ? out_dir + "/factors.csv" : ""}};
    const std::string report_path = out_dir + "/report.json";
    write_json_file(report_path, report);
    return report_path;
}

}  // namespace gfa
