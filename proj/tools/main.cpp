#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>

#include "cli.hpp"

namespace {

using namespace pg::cli;

int parse_sign(const std::string& s) {
    if (s == "+" || s == "plus") return 1;
    if (s == "-" || s == "minus") return -1;
    throw ConfigError("--sign must be + or -");
}

// Writes to --out when given, stdout otherwise.
struct Sink {
    std::unique_ptr<std::ofstream> file;
    std::ostream& get(const std::string& path) {
        if (path.empty()) return std::cout;
        file = std::make_unique<std::ofstream>(path);
        if (!*file) throw ConfigError("cannot open output file " + path);
        return *file;
    }
};

RunConfig config_or_default(const std::string& path) { return path.empty() ? RunConfig{} : load_config(path); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pseudogap analysis for Wigner-von Neumann perturbations of periodic Schrodinger operators"};
    app.require_subcommand(1);

    std::string config, out, sign = "+", offsets, eps0_list, eps_list, fixture = "zero_plus";
    int band = 0, jmax = 3;
    std::optional<double> beta, gamma, z0;

    auto* bands = app.add_subcommand("bands", "Band edges lambda_j, mu_j");
    bands->add_option("--config", config, "Run configuration")->required();
    bands->add_option("--jmax", jmax, "Highest band index");
    bands->add_option("--out", out, "Output file (default stdout)");

    auto* pred = app.add_subcommand("predict", "Critical point constants as JSON");
    pred->add_option("--config", config, "Run configuration")->required();
    pred->add_option("--band", band, "Band index j");
    pred->add_option("--sign", sign, "Critical point branch, + or -");
    pred->add_option("--out", out, "Output file (default stdout)");

    auto* pgap = app.add_subcommand("pseudogap", "Spectral density scan around a critical point");
    pgap->add_option("--config", config, "Run configuration")->required();
    pgap->add_option("--band", band, "Band index j");
    pgap->add_option("--sign", sign, "Critical point branch, + or -");
    pgap->add_option("--offsets", offsets, "Geometric offsets lo:hi:n")->required();
    pgap->add_option("--out", out, "CSV of samples")->required();

    auto* mv = app.add_subcommand("model-verify", "Limit ratios of the model system");
    mv->add_option("--config", config, "Run configuration (model.beta, model.gamma, output.format)");
    mv->add_option("--eps0-list", eps0_list, "Comma-separated eps0 values")->required();
    mv->add_option("--fixture", fixture, "Model fixture name");
    mv->add_option("--beta", beta, "Overrides model.beta");
    mv->add_option("--gamma", gamma, "Overrides model.gamma");
    mv->add_option("--out", out, "Output file (default stdout)");

    auto* conn = app.add_subcommand("connection", "Connection matrix across the turning region");
    conn->add_option("--config", config, "Run configuration (run.Z0, output.format)");
    conn->add_option("--eps-list", eps_list, "Comma-separated eps values")->required();
    conn->add_option("--beta", beta, "beta (default 0.5)");
    conn->add_option("--gamma", gamma, "gamma (default 0.75)");
    conn->add_option("--z0", z0, "Inner region boundary Z0");
    conn->add_option("--out", out, "Output file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitPrecondition;
    }

    try {
        Sink sink;
        if (bands->parsed()) {
            cmd_bands(load_config(config), jmax, sink.get(out));
        } else if (pred->parsed()) {
            cmd_predict(load_config(config), band, parse_sign(sign), sink.get(out));
        } else if (pgap->parsed()) {
            const auto cfg = load_config(config);
            const int s = parse_sign(sign);
            const auto offs = parse_offsets(offsets);
            cmd_pseudogap(cfg, band, s, offs, sink.get(out), std::cout);
        } else if (mv->parsed()) {
            const auto cfg = config_or_default(config);
            cmd_model_verify(beta.value_or(cfg.model_beta), gamma.value_or(cfg.model_gamma), parse_list(eps0_list),
                             fixture, cfg.format, sink.get(out));
        } else if (conn->parsed()) {
            const auto cfg = config_or_default(config);
            cmd_connection(beta.value_or(0.5), gamma.value_or(0.75), parse_list(eps_list), z0.value_or(cfg.Z0),
                           cfg.format, sink.get(out));
        }
    } catch (const pg::PreconditionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitPrecondition;
    } catch (const InsufficientData& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInsufficient;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitOk;
}
