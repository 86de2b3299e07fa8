#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "pseudogap/asymptotic.hpp"

namespace pg::cli {

namespace {

using json = nlohmann::ordered_json;

constexpr double kStepsPerSecond = 1e6;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_number(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end || !std::isfinite(out))
        throw ConfigError("config: " + key + " expects a finite number, got '" + v + "'");
    return out;
}

std::string resolve(const std::string& base, const std::string& path) {
    const std::filesystem::path p(path);
    return p.is_absolute() ? path : (std::filesystem::path(base) / p).string();
}

// Two-column (x, q1) samples, linear interpolation, zero beyond the last abscissa.
std::function<double(double)> load_q1(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open q1 file " + path);
    std::vector<double> xs, vs;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        std::istringstream ls(line);
        double x, v;
        if (!(ls >> x >> v)) throw ConfigError("config: malformed line in q1 file " + path);
        if (!xs.empty() && !(x > xs.back())) throw ConfigError("config: q1 abscissae must increase in " + path);
        xs.push_back(x);
        vs.push_back(v);
    }
    if (xs.size() < 2) throw ConfigError("config: q1 file needs at least two samples");
    return [xs, vs](double x) {
        if (x <= xs.front()) return vs.front();
        if (x >= xs.back()) return 0.0;
        const auto it = std::upper_bound(xs.begin(), xs.end(), x);
        const std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
        const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
        return vs[i] + t * (vs[i + 1] - vs[i]);
    };
}

double reduce_pi(double a) {
    double r = std::fmod(a, kPi);
    if (r < 0) r += kPi;
    return r >= kPi ? 0.0 : r;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string fmt(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

RunConfig parse_config(std::istream& in, const std::string& base_dir) {
    RunConfig c;
    c.base_dir = base_dir;
    std::map<std::string, std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not of the form key = value");
        const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
        if (!seen.emplace(key, val).second) throw ConfigError("config: duplicate key " + key);
        auto num = [&] { return to_number(key, val); };
        if (key == "background.type") {
            if (val != "free" && val != "constant" && val != "sampled")
                throw ConfigError("config: background.type must be free, constant or sampled");
            c.background_type = val;
        } else if (key == "background.a") {
            c.a = num();
        } else if (key == "background.v0") {
            c.v0 = num();
        } else if (key == "background.file") {
            c.background_file = val;
        } else if (key == "wvn.c") {
            c.c = num();
        } else if (key == "wvn.omega") {
            c.omega = num();
        } else if (key == "wvn.delta") {
            c.delta = num();
        } else if (key == "wvn.gamma") {
            c.gamma = num();
        } else if (key == "wvn.alpha") {
            if (val == "auto") {
                c.alpha_auto = true;
            } else {
                c.alpha = num();
            }
        } else if (key == "q1.type") {
            if (val != "none" && val != "file") throw ConfigError("config: q1.type must be none or file");
            c.q1_type = val;
        } else if (key == "q1.file") {
            c.q1_file = val;
        } else if (key == "q1.c1") {
            c.c1 = num();
        } else if (key == "q1.alpha1") {
            c.alpha1 = num();
        } else if (key == "run.ode_tol") {
            c.ode_tol = num();
        } else if (key == "run.quad_tol") {
            c.quad_tol = num();
        } else if (key == "run.x_max_cap") {
            c.x_max_cap = num();
        } else if (key == "run.time_per_sample") {
            c.time_per_sample = num();
        } else if (key == "run.Z0") {
            c.Z0 = num();
        } else if (key == "output.format") {
            if (val == "csv") {
                c.format = Format::csv;
            } else if (val == "json") {
                c.format = Format::json;
            } else {
                throw ConfigError("config: output.format must be csv or json");
            }
        } else if (key == "model.beta") {
            c.model_beta = num();
        } else if (key == "model.gamma") {
            c.model_gamma = num();
        } else {
            throw ConfigError("config: unknown key " + key);
        }
    }
    if (!(c.a > 0)) throw ConfigError("config: background.a must be positive");
    if (!(c.ode_tol > 1e-14 && c.ode_tol <= 1e-2)) throw ConfigError("config: run.ode_tol must lie in (1e-14, 1e-2]");
    if (!(c.quad_tol > 0 && c.quad_tol < 1)) throw ConfigError("config: run.quad_tol must lie in (0, 1)");
    if (!(c.x_max_cap > 0)) throw ConfigError("config: run.x_max_cap must be positive");
    if (c.time_per_sample < 0) throw ConfigError("config: run.time_per_sample must be nonnegative");
    if (c.background_type == "sampled" && c.background_file.empty())
        throw ConfigError("config: background.type = sampled needs background.file");
    if (c.q1_type == "file" && c.q1_file.empty()) throw ConfigError("config: q1.type = file needs q1.file");
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    const auto dir = std::filesystem::path(path).parent_path().string();
    return parse_config(in, dir.empty() ? "." : dir);
}

WvNProblem make_problem(const RunConfig& cfg) {
    WvNProblem p;
    if (cfg.background_type == "free") {
        p.bg = PeriodicBackground::free(cfg.a);
    } else if (cfg.background_type == "constant") {
        p.bg = PeriodicBackground::constant(cfg.v0, cfg.a);
    } else {
        p.bg = PeriodicBackground::from_file(resolve(cfg.base_dir, cfg.background_file), cfg.a);
    }
    p.c = cfg.c;
    p.omega = cfg.omega;
    p.delta = cfg.delta;
    p.gamma = cfg.gamma;
    p.alpha = cfg.alpha_auto ? 0.0 : cfg.alpha;
    if (cfg.q1_type == "file") {
        p.q1 = load_q1(resolve(cfg.base_dir, cfg.q1_file));
        p.c1 = cfg.c1;
        p.alpha1 = cfg.alpha1;
    }
    p.validate();
    return p;
}

SpectralOptions spectral_options(const RunConfig& cfg) {
    SpectralOptions o;
    o.ode_tol = cfg.ode_tol;
    o.quad_tol = cfg.quad_tol;
    o.x_max_cap = cfg.x_max_cap;
    if (cfg.time_per_sample > 0) o.max_steps = static_cast<std::size_t>(cfg.time_per_sample * kStepsPerSecond);
    return o;
}

std::vector<double> parse_list(const std::string& spec) {
    std::vector<double> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_number("list", trim(item)));
    if (out.empty()) throw ConfigError("empty value list");
    return out;
}

std::vector<double> parse_offsets(const std::string& spec) {
    std::stringstream ss(spec);
    std::string lo, hi, n;
    if (!std::getline(ss, lo, ':') || !std::getline(ss, hi, ':') || !std::getline(ss, n))
        throw ConfigError("--offsets expects lo:hi:n");
    const double count = to_number("--offsets", trim(n));
    if (count != std::floor(count) || count < 2) throw ConfigError("--offsets needs an integer count >= 2");
    return geometric_offsets(to_number("--offsets", trim(lo)), to_number("--offsets", trim(hi)), static_cast<int>(count));
}

void cmd_bands(const RunConfig& cfg, int j_max, std::ostream& out) {
    if (j_max < 0) throw ConfigError("--jmax must be nonnegative");
    const auto p = make_problem(cfg);
    const auto bs = band_edges(p.bg, j_max);
    if (cfg.format == Format::json) {
        json rows = json::array();
        for (int j = 0; j <= j_max; ++j) {
            const auto& b = bs.bands[static_cast<std::size_t>(j)];
            rows.push_back({{"j", j}, {"lambda_j", b.lo}, {"mu_j", b.hi}});
        }
        out << rows.dump() << '\n';
        return;
    }
    out << "j,lambda_j,mu_j\n";
    for (int j = 0; j <= j_max; ++j) {
        const auto& b = bs.bands[static_cast<std::size_t>(j)];
        out << j << ',' << fmt(b.lo) << ',' << fmt(b.hi) << '\n';
    }
}

void cmd_predict(const RunConfig& cfg, int band, int sign, std::ostream& out) {
    const auto p = make_problem(cfg);
    FloquetOptions fo;
    const auto bs = band_edges(p.bg, std::max(band, 0), fo);
    const auto rc = resolve_critical(p, bs, band, sign, std::nullopt, fo);
    const auto pr = predict(rc.crit, p.gamma, p.bg.a);
    json j;
    j["nu"] = rc.crit.nu;
    j["beta_cr"] = rc.crit.beta_cr;
    j["phi_cr"] = rc.crit.phi_cr;
    j["c_cr"] = pr.c_cr;
    j["a_cr"] = pr.a_cr;
    j["C_mp"] = pr.C_mp;
    j["exponent_coeff"] = pr.exponent_coeff;
    out << j.dump(2) << '\n';
}

void cmd_pseudogap(const RunConfig& cfg, int band, int sign, const std::vector<double>& offsets, std::ostream& csv,
                   std::ostream& js) {
    auto p = make_problem(cfg);
    const auto bs = band_edges(p.bg, std::max(band, 0));
    const auto rc = resolve_critical(p, bs, band, sign);
    ScanOptions so;
    so.spectral = spectral_options(cfg);
    const auto est = estimate_alpha_cr(p, rc, so.spectral);
    if (cfg.alpha_auto) p.alpha = reduce_pi(est.alpha_cr + kPi / 2);
    const auto scan = pseudogap_scan(p, bs, rc, est, offsets, so);

    csv << "lambda,offset,A_re,A_im,rho_prime,tail_error,converged\n";
    for (const auto& s : scan.samples) {
        const auto& d = s.density;
        csv << fmt(d.lambda) << ',' << fmt(d.lambda - rc.crit.nu) << ',' << fmt(d.A_alpha.real()) << ','
            << fmt(d.A_alpha.imag()) << ',' << fmt(d.rho_prime) << ',' << fmt(d.tail_error) << ','
            << bool_str(d.converged) << '\n';
    }

    auto fit_json = [](const PseudogapFit& f) {
        json j;
        j["valid"] = f.valid;
        j["points"] = f.points.size();
        j["slope_target"] = f.slope_target;
        j["slope"] = f.valid ? json(f.slope) : json(nullptr);
        j["slope_error"] = f.valid ? json(f.slope_error) : json(nullptr);
        j["rel_dev"] = f.valid ? json(f.rel_dev) : json(nullptr);
        return j;
    };
    json j;
    j["nu"] = rc.crit.nu;
    j["alpha"] = p.alpha;
    j["alpha_cr"] = est.alpha_cr;
    j["alpha_cr_residual"] = est.residual;
    j["alpha_cr_flagged"] = est.flagged;
    j["c_cr"] = scan.c_cr;
    j["above"] = fit_json(scan.above);
    j["below"] = fit_json(scan.below);
    if (scan.above.valid && scan.below.valid) {
        const double diff = std::abs(scan.above.slope - scan.below.slope);
        j["two_sided_consistent"] = diff <= scan.above.slope_error + scan.below.slope_error;
        j["rel_dev"] = std::max(scan.above.rel_dev, scan.below.rel_dev);
    } else {
        j["two_sided_consistent"] = nullptr;
        j["rel_dev"] = nullptr;
    }
    json s2;
    s2["offset"] = scan.sin2.offset;
    s2["spread"] = scan.sin2.spread;
    s2["alpha_fit"] = scan.sin2.alpha_fit;
    j["sin2"] = s2;
    js << j.dump(2) << '\n';
    if (!scan.above.valid || !scan.below.valid)
        throw InsufficientData("pseudogap: fewer than 5 converged samples on one side; fit refused");
}

void cmd_model_verify(double beta, double gamma, const std::vector<double>& eps0_list, const std::string& fixture,
                      Format format, std::ostream& out) {
    const auto spec = model_fixture(fixture, beta, gamma);
    const auto rows = verify_limit_ratios(spec, eps0_list, true);
    if (format == Format::json) {
        json a = json::array();
        for (const auto& r : rows)
            a.push_back({{"eps0", r.eps0}, {"eps", r.eps}, {"limit_norm", r.limit_norm}, {"ratio", r.ratio},
                         {"target", r.target}});
        out << a.dump() << '\n';
        return;
    }
    out << "eps0,eps,limit_norm,ratio,target\n";
    for (const auto& r : rows)
        out << fmt(r.eps0) << ',' << fmt(r.eps) << ',' << fmt(r.limit_norm) << ',' << fmt(r.ratio) << ','
            << fmt(r.target) << '\n';
}

void cmd_connection(double beta, double gamma, const std::vector<double>& eps_list, double Z0, Format format,
                    std::ostream& out) {
    std::vector<ConnectionReport> reps;
    for (double e : eps_list) reps.push_back(connection_matrix(beta, gamma, e, Z0));
    auto det = [](const ConnectionReport& r) { return std::abs(r.D[0][0] * r.D[1][1] - r.D[0][1] * r.D[1][0]); };
    if (format == Format::json) {
        json a = json::array();
        for (const auto& r : reps)
            a.push_back({{"eps", r.eps},
                         {"D11_re", r.D[0][0].real()},
                         {"D11_im", r.D[0][0].imag()},
                         {"D21_re", r.D[1][0].real()},
                         {"D21_im", r.D[1][0].imag()},
                         {"abs_det", det(r)},
                         {"col1_target_dev", r.col1_target_dev},
                         {"det_dev", r.det_dev},
                         {"col1_rederived_dev", r.col1_rederived_dev},
                         {"det_rederived_dev", r.det_rederived_dev}});
        out << a.dump() << '\n';
        return;
    }
    out << "eps,D11_re,D11_im,D21_re,D21_im,abs_det,col1_target_dev,det_dev,col1_rederived_dev,det_rederived_dev\n";
    for (const auto& r : reps)
        out << fmt(r.eps) << ',' << fmt(r.D[0][0].real()) << ',' << fmt(r.D[0][0].imag()) << ','
            << fmt(r.D[1][0].real()) << ',' << fmt(r.D[1][0].imag()) << ',' << fmt(det(r)) << ','
            << fmt(r.col1_target_dev) << ',' << fmt(r.det_dev) << ',' << fmt(r.col1_rederived_dev) << ','
            << fmt(r.det_rederived_dev) << '\n';
}

}  // namespace pg::cli
