#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pseudogap/critical.hpp"
#include "pseudogap/model.hpp"
#include "pseudogap/spectral.hpp"

namespace pg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitPrecondition = 2;
inline constexpr int kExitInsufficient = 3;

struct ConfigError : PreconditionError {
    using PreconditionError::PreconditionError;
};

struct InsufficientData : NumericError {
    using NumericError::NumericError;
};

enum class Format { csv, json };

struct RunConfig {
    std::string background_type = "free";
    double a = 1.0;
    double v0 = 0.0;
    std::string background_file;
    double c = 0.0;
    double omega = 1.0;
    double delta = 0.0;
    double gamma = 0.75;
    double alpha = 0.0;
    // alpha = alpha_cr + pi/2, resolved after the critical point is known.
    bool alpha_auto = false;
    std::string q1_type = "none";
    std::string q1_file;
    double c1 = 0.0;
    double alpha1 = 1.0;
    double ode_tol = 1e-10;
    double quad_tol = 1e-12;
    double x_max_cap = 2e6;
    double time_per_sample = 0.0;
    double Z0 = kDefaultZ0;
    Format format = Format::csv;
    double model_beta = 0.25;
    double model_gamma = 0.6;
    // Directory against which relative file paths are resolved.
    std::string base_dir = ".";
};

// Flat key=value text; '#' starts a comment. Throws ConfigError naming the key or violated condition.
RunConfig parse_config(std::istream& in, const std::string& base_dir = ".");
RunConfig load_config(const std::string& path);

// Builds the problem and checks gamma in (1/2, 1), 2 a omega / pi not an integer, alpha in [0, pi).
WvNProblem make_problem(const RunConfig& cfg);
SpectralOptions spectral_options(const RunConfig& cfg);

// "lo:hi:n" geometric grid.
std::vector<double> parse_offsets(const std::string& spec);
std::vector<double> parse_list(const std::string& spec);

// Shortest round-trip decimal form.
std::string fmt(double v);

void cmd_bands(const RunConfig& cfg, int j_max, std::ostream& out);
void cmd_predict(const RunConfig& cfg, int band, int sign, std::ostream& out);
// Samples as CSV to csv, fit summary as JSON to json; throws InsufficientData after writing both when a fit is refused.
void cmd_pseudogap(const RunConfig& cfg, int band, int sign, const std::vector<double>& offsets, std::ostream& csv,
                   std::ostream& json);
void cmd_model_verify(double beta, double gamma, const std::vector<double>& eps0_list, const std::string& fixture,
                      Format format, std::ostream& out);
void cmd_connection(double beta, double gamma, const std::vector<double>& eps_list, double Z0, Format format,
                    std::ostream& out);

}  // namespace pg::cli
