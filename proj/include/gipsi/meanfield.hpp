#pragma once

#include "gipsi/dynamics.hpp"
#include "gipsi/market.hpp"

#include <complex>
#include <stdexcept>
#include <vector>

namespace gipsi::meanfield {

class Degenerate : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class IllConditioned : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Damped-oscillator form of the one-investor one-asset return equation:
///   [tau d2/dt2 + d/dt + omega_sq] u = nonlinear terms
struct ReducedParams {
    double tau = 0.0;       ///< 1/tau = 1/tau_a + 1/tau_b
    double omega_sq = 0.0;  ///< (1 - gamma * Ap/E) / (tau_a + tau_b)
    double ap_over_e = 1.0;
};

ReducedParams reduce(const ModelParams& params, double ap_over_e);

struct Eigenvalues {
    std::complex<double> plus;  ///< larger real part
    std::complex<double> minus;
};

Eigenvalues eigenvalues(const ReducedParams& reduced);

enum class Regime { Oscillatory, StableDecay, Unstable };

struct PhaseLabel {
    Regime regime = Regime::StableDecay;
    bool marginal = false; ///< omega_sq or the discriminant is exactly zero
    Eigenvalues roots;
};

const char* to_string(Regime regime);

PhaseLabel classify(const ModelParams& params, double ap_over_e);

/// Finite-shock transition curve gamma* = (1 + f0) / (1 - beta f0). Throws Degenerate when beta f0 = 1.
double transition_gamma(double f0, double beta);

struct ResidualPoint {
    double t = 0.0;
    double linear = 0.0;     ///< [tau_a tau_b d2 + (tau_a + tau_b) d + (1 - gamma Ap/E)] u
    double nonlinear = 0.0;  ///< quadratic right-hand side
    double residual = 0.0;   ///< linear - nonlinear
};

/// Pointwise residual of the reduced third-order price equation along a sampled 1x1 trajectory.
///
/// The first and second derivatives of the return are taken with second-order central differences
/// of the sampled returns. The first and last three samples are excluded.
std::vector<ResidualPoint> reduced_residual(const Trajectory& trajectory, const ModelParams& params);

/// Nonlinear right-hand side of the reduced equation evaluated exactly at one 1x1 state,
/// with du/dt taken from the response equations.
double reduced_nonlinear_at(const MarketState& state, const ModelParams& params);

enum class Variable { Price, Equity, Holdings };
enum class FitKind { Growth, Decay };

struct Window {
    double t_lo = 0.0;
    double t_hi = 0.0;
};

/// Least-squares slope of log|X - X_ref| against t over the window.
/// X_ref is 0 for growth fits and the last sampled value for decay fits.
/// `index` selects the asset (Price) or investor (Equity) or flattened holding (Holdings).
double fit_dominant_exponent(const Trajectory& trajectory, Variable variable, Window window,
                             FitKind kind = FitKind::Growth, std::size_t index = 0);

struct ExponentReport {
    double price = 0.0;
    double equity = 0.0;
    double holdings = 0.0;
    double spread = 0.0;   ///< (max - min) / max |w|
    bool agree = false;    ///< spread < threshold
};

ExponentReport check_equal_exponents(const Trajectory& trajectory, Window window,
                                     FitKind kind = FitKind::Growth, double threshold = 0.05);

} // namespace gipsi::meanfield
