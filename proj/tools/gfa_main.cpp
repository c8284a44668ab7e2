// Command-line front end for the generalized factor analysis library.
//
// Exit codes: 0 success, 2 config/parse error, 3 numerical failure,
// 4 precondition violation.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gfa/io.hpp"

namespace {

std::vector<gfa::Index> parse_grid(const std::string& spec) {
    std::vector<gfa::Index> grid;
    std::size_t start = 0;
    while (start <= spec.size() && !spec.empty()) {
        const std::size_t comma = spec.find(',', start);
        const std::string tok = spec.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!tok.empty())
            grid.push_back(static_cast<gfa::Index>(std::stoll(tok)));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return grid;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generalized factor analysis: flocking detection and extraction"};
    app.require_subcommand(1);

    // synth
    std::string synth_config, synth_out = ".";
    std::int64_t synth_seed = -1;
    auto* synth = app.add_subcommand("synth", "Generate a scenario from a config file");
    synth->add_option("config", synth_config, "scenario config file")->required();
    synth->add_option("-o,--out", synth_out, "output directory");
    synth->add_option("--seed", synth_seed, "override the config seed");

    // decompose
    std::string dec_input, dec_out = ".", dec_grid;
    gfa::DecomposeFlags dec_flags;
    auto* dec = app.add_subcommand("decompose", "Detect and extract the factor structure");
    dec->add_option("input", dec_input, "ensemble CSV (rows = cross-section)")->required();
    dec->add_option("-o,--out", dec_out, "output directory");
    dec->add_option("--grid", dec_grid, "comma-separated truncation sizes");
    dec->add_option("--gamma", dec_flags.gamma, "growth-ratio threshold");
    dec->add_option("--tau", dec_flags.tau, "cap multiplier on the trailing median");
    dec->add_option("--top", dec_flags.top_m, "number of eigenvalues tracked");
    dec->add_flag("--header", dec_flags.header, "input has a header row");

    // stationary
    std::string sta_input, sta_out = ".";
    gfa::StationaryFlags sta_flags;
    auto* sta = app.add_subcommand("stationary", "Line detection and PD/PND split");
    sta->add_option("input", sta_input, "single-series CSV (one row or one column)")->required();
    sta->add_option("-o,--out", sta_out, "output directory");
    sta->add_option("--max-lines", sta_flags.max_lines, "maximum number of lines");
    sta->add_option("--threshold", sta_flags.threshold, "peak threshold, multiples of the median");
    sta->add_flag("--header", sta_flags.header, "input has a header row");

    // flock
    std::string flk_input, flk_out = ".", flk_grid;
    gfa::DecomposeFlags flk_flags;
    auto* flk = app.add_subcommand("flock", "Extract the flocking component of a field");
    flk->add_option("input", flk_input, "field CSV (N rows x T columns)")->required();
    flk->add_option("-o,--out", flk_out, "output directory");
    flk->add_option("--grid", flk_grid, "comma-separated truncation sizes");
    flk->add_option("--gamma", flk_flags.gamma, "growth-ratio threshold");
    flk->add_option("--tau", flk_flags.tau, "cap multiplier on the trailing median");
    flk->add_option("--top", flk_flags.top_m, "number of eigenvalues tracked");
    flk->add_flag("--header", flk_flags.header, "input has a header row");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0)  // --help
            return app.exit(e);
        std::cerr << e.what() << '\n';
        return 2;
    }

    try {
        if (synth->parsed()) {
            const std::optional<std::uint64_t> seed =
                synth_seed >= 0 ? std::optional<std::uint64_t>(synth_seed) : std::nullopt;
            std::cout << gfa::run_synth(synth_config, synth_out, seed) << '\n';
        } else if (dec->parsed()) {
            dec_flags.grid = parse_grid(dec_grid);
            std::cout << gfa::run_decompose(dec_input, dec_out, dec_flags) << '\n';
        } else if (sta->parsed()) {
            std::cout << gfa::run_stationary(sta_input, sta_out, sta_flags) << '\n';
        } else if (flk->parsed()) {
            flk_flags.grid = parse_grid(flk_grid);
            std::cout << gfa::run_flock(flk_input, flk_out, flk_flags) << '\n';
        }
    } catch (const gfa::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const gfa::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return 2;
    } catch (const gfa::ArgumentError& e) {
        std::cerr << "precondition violated: " << e.what() << '\n';
        return 4;
    } catch (const gfa::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
