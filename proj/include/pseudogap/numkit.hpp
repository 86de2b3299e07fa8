#pragma once

#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace pg {

using cplx = std::complex<double>;
using State = std::vector<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Violated precondition on user-supplied parameters.
struct PreconditionError : NumericError {
    using NumericError::NumericError;
};

struct IntegrationError : NumericError {
    double abscissa;
    IntegrationError(const std::string& what, double x) : NumericError(what), abscissa(x) {}
};

// dy = f(x, y); the field must be linear in y when renormalization is enabled.
using Field = std::function<void(double x, const double* y, double* dy)>;

struct IvpOptions {
    double tol = 1e-10;
    double max_step = kInf;
    double initial_step = 0.0;
    // Abscissae at which the state is recorded, ordered along the direction of integration.
    std::vector<double> outputs;
    // Rescale to unit max-norm whenever the norm exceeds this bound; 0 disables.
    double renorm_threshold = 0.0;
    std::size_t max_steps = 200000000;
};

struct Trajectory {
    std::vector<double> x;
    std::vector<State> y;
    // Natural log of the factor by which the stored state must be multiplied.
    std::vector<double> log_scale;
    State terminal;
    double terminal_log_scale = 0.0;
    std::size_t steps = 0;
    std::size_t rejected = 0;
};

// Dormand-Prince 5(4) with PI step control. Integrates backwards when x1 < x0.
Trajectory integrate_ivp(const Field& f, double x0, double x1, State y0, const IvpOptions& opt = {});

double quad_real(const std::function<double(double)>& f, double a, double b, double tol);
cplx quad_complex(const std::function<cplx(double)>& f, double a, double b, double tol);

// Adaptive double-exponential quadrature with bisection fallback.
template <class F>
auto quad_adaptive(const F& f, double a, double b, double tol = 1e-12) {
    if constexpr (std::is_same_v<std::decay_t<std::invoke_result_t<const F&, double>>, cplx>)
        return quad_complex(f, a, b, tol);
    else
        return quad_real(f, a, b, tol);
}

// Principal value of the integral of f over (a, b) with a simple pole strictly inside; b may be +inf.
double quad_pv(const std::function<double(double)>& f, double a, double b, double pole, double tol = 1e-12);

double log_gamma(double x);
double beta_fn(double p, double q);

struct AiryValues {
    double ai, bi, aip, bip;
};

inline constexpr double kAirySwitch = 5.5;
inline constexpr double kAiryMaxArg = 50.0;

AiryValues airy_pair(double z);

struct LimitEstimate {
    double value = 0.0;
    double error_bar = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    bool converged = true;
};

// Period-averaged limit of an oscillating sequence with a power-law drift x^decay_exponent.
LimitEstimate tail_limit(const std::vector<double>& x, const std::vector<double>& v, double period,
                         double decay_exponent, double rel_tol = 1e-2);

}  // namespace pg
