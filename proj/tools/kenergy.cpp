#include <iostream>

#include <CLI11.hpp>

#include "kenergy/cli.hpp"

namespace {

void add_common(CLI::App* sub, kenergy::RunConfig& cfg, std::string& convention,
                std::vector<double>& window) {
    sub->add_option("--input", cfg.input, "JSON function record");
    sub->add_option("--builtin", cfg.builtin, "u0 | quadratic | kink | phi0 | u0-square");
    sub->add_option("--grid", cfg.grid, "number of grid cells");
    sub->add_option("--window", window, "primal window LO HI")->expected(2);
    sub->add_option("--convention", convention, "donaldson | paper-lemma");
    sub->add_option("--seed", cfg.seed, "seed for randomized families");
    sub->add_option("--out", cfg.out, "write PREFIX.json and PREFIX.csv");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Toric K-energy toolkit"};
    app.require_subcommand(1);
    kenergy::RunConfig cfg;
    std::string convention;
    std::vector<double> window;

    auto* transform = app.add_subcommand("transform", "Legendre transform of a function");
    auto* geodesic = app.add_subcommand("geodesic", "primal potentials along u0 + t v");
    auto* counter = app.add_subcommand("counterexample", "K-energy along the equator-kink ray");
    auto* energy = app.add_subcommand("energy", "K-energy report of a function");
    auto* slope = app.add_subcommand("slope", "M(u_t)/t along a ray");
    auto* stability = app.add_subcommand("stability", "stability margin over test functions");
    auto* minimize = app.add_subcommand("minimize", "discrete minimizer of the K-energy");
    auto* certify = app.add_subcommand("certify", "uniqueness certificate for a pair");
    for (auto* sub : {transform, geodesic, counter, energy, slope, stability, minimize, certify})
        add_common(sub, cfg, convention, window);
    for (auto* sub : {geodesic, slope, certify}) {
        sub->add_option("--input2", cfg.input2, "second function record");
        sub->add_option("--builtin2", cfg.builtin2, "second builtin function");
    }
    for (auto* sub : {geodesic, slope}) sub->add_option("--t", cfg.ts, "parameter values");
    counter->add_option("--tmax", cfg.tmax, "largest t");
    counter->add_option("--steps", cfg.steps, "number of t values");
    for (auto* sub : {energy, stability, minimize})
        sub->add_option("--polytope", cfg.polytope, "polytope name or JSON record");
    stability->add_flag("--scale-inf-by-volume", cfg.scale_inf_by_volume,
                        "multiply the infimum term by Vol(P)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    cfg.command = app.get_subcommands().front()->get_name();
    try {
        if (!convention.empty()) cfg.convention = kenergy::parse_convention(convention);
    } catch (const kenergy::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }
    if (window.size() == 2) cfg.window = {window[0], window[1]};

    kenergy::RunResult r = kenergy::run(cfg);
    if (!r.message.empty()) std::cerr << r.message << '\n';
    try {
        if (cfg.out) {
            kenergy::write_text_file(*cfg.out + ".json", r.json + "\n");
            if (!r.csv.empty()) kenergy::write_text_file(*cfg.out + ".csv", r.csv);
        } else if (!r.csv.empty() && r.exit_code == 0) {
            std::cout << r.csv;
        } else {
            std::cout << r.json << '\n';
        }
    } catch (const kenergy::IoError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    }
    return r.exit_code;
}
