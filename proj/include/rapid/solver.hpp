#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rapid/linalg.hpp"

namespace rapid {

/// Composite objective f = f1 + f2: f1 smooth with L-Lipschitz gradient, f2
/// proximable. `prox_f2(u, gamma)` must return the prox of gamma·f2 at u, so
/// regularization weights live inside the closure. Callbacks must be pure.
struct ProblemSpec {
    std::function<double(const DenseVector&)> f1_value;
    std::function<DenseVector(const DenseVector&)> f1_grad;
    std::function<double(const DenseVector&)> f2_value;
    std::function<DenseVector(const DenseVector&, double)> prox_f2;
    /// Closed-form argmin over θ of f(θx); may return anything, the engine
    /// validates the result.
    std::function<double(const DenseVector&)> theta_search;
    double lipschitz = 0.0;
    std::size_t dim = 0;

    double value(const DenseVector& x) const { return f1_value(x) + f2_value(x); }
};

enum class Rule { Fista, RapidI, RapidII };
enum class StepPolicy { FixedInverseL, Backtracking };

inline std::string_view to_string(Rule r) {
    switch (r) {
    case Rule::Fista: return "fista";
    case Rule::RapidI: return "rapid1";
    case Rule::RapidII: return "rapid2";
    }
    return "?";
}

inline Rule parse_rule(std::string_view s) {
    if (s == "fista") return Rule::Fista;
    if (s == "rapid1") return Rule::RapidI;
    if (s == "rapid2") return Rule::RapidII;
    throw Error("bad-rule", "unknown rule '" + std::string(s) + "'");
}

struct SolverConfig {
    Rule rule = Rule::RapidII;
    StepPolicy step_policy = StepPolicy::FixedInverseL;
    std::size_t max_iter = 1000;
    double rel_tol = 1e-7;
    double backtrack_shrink = 0.5;
    bool record_trace = true;
    /// Fill IterationRecord::elapsed_ns from a steady clock. Off keeps traces
    /// byte-reproducible.
    bool record_timing = false;
};

struct SolverState {
    DenseVector x;       // x_t
    DenseVector x_prev;  // x_{t-1}
    double theta = 1.0;
    double theta_prev = 1.0;
    DenseVector v;
    double eta = 1.0;
    double eta_prev = 1.0;
    std::size_t t = 0;
    double gamma = 0.0;
};

struct IterationRecord {
    std::size_t t = 0;
    double f_x = 0.0;
    double f_theta_x = 0.0;
    double theta = 1.0;
    double eta = 1.0;
    double gamma = 0.0;
    std::int64_t elapsed_ns = 0;

    friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

using Trace = std::vector<IterationRecord>;

struct SolveResult {
    DenseVector solution;
    Trace trace;
    std::size_t iterations = 0;
    bool converged = false;  // stopping rule fired before max_iter
    /// ‖x_t − θ_t x_t‖² per iteration, for the rate-bound diagnostic.
    std::vector<double> theta_gap_sq;
};

// ---------------------------------------------------------------------------
// Scalar schedules
// ---------------------------------------------------------------------------

/// η_t from η_{t-1}. Satisfies (1−η_t)/η_t² = 1/η_{t−1}².
inline double eta_next(double eta_prev) {
    require(eta_prev > 0.0 && eta_prev <= 1.0, "bad-eta", "eta must lie in (0, 1]");
    const double e2 = eta_prev * eta_prev;
    // (sqrt(e⁴ + 4e²) − e²)/2 rewritten to avoid cancellation for small e
    return 2.0 * e2 / (std::sqrt(e2 * e2 + 4.0 * e2) + e2);
}

/// FISTA extrapolation weight (t−1)/(t+2).
inline double fista_momentum(std::size_t t) {
    require(t >= 1, "bad-iteration", "fista_momentum requires t >= 1");
    return static_cast<double>(t - 1) / static_cast<double>(t + 2);
}

/// Coefficients (on θ_{t−1}x_{t−1}, x_t, θ_t x_t) of the first auxiliary rule.
struct RapidICoefficients {
    double prev_scaled, current, current_scaled;
    double sum() const { return prev_scaled + current + current_scaled; }
};

inline RapidICoefficients rapid1_coefficients(double eta, double eta_prev) {
    return {eta * (1.0 - 1.0 / eta_prev), eta / eta_prev, 1.0 - eta};
}

/// Coefficients (on θ_{t−1}x_{t−1}, θ_t x_t) of the second auxiliary rule.
struct RapidIICoefficients {
    double prev_scaled, current_scaled;
    double sum() const { return prev_scaled + current_scaled; }
};

inline RapidIICoefficients rapid2_coefficients(double eta, double eta_prev) {
    return {eta * (1.0 - 1.0 / eta_prev), 1.0 - eta + eta / eta_prev};
}

inline DenseVector aux_update_rapid1(const SolverState& s) {
    require(s.eta_prev > 0.0, "bad-eta", "eta_prev must be positive");
    const auto c = rapid1_coefficients(s.eta, s.eta_prev);
    DenseVector v(s.x.size());
    const double a = c.prev_scaled * s.theta_prev;
    const double b = c.current + c.current_scaled * s.theta;
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = a * s.x_prev[i] + b * s.x[i];
    return v;
}

inline DenseVector aux_update_rapid2(const SolverState& s) {
    require(s.eta_prev > 0.0, "bad-eta", "eta_prev must be positive");
    const auto c = rapid2_coefficients(s.eta, s.eta_prev);
    return lincomb(c.prev_scaled * s.theta_prev, s.x_prev, c.current_scaled * s.theta, s.x);
}

/// x_t + (t−1)/(t+2)·(x_t − x_{t−1})
inline DenseVector aux_update_fista(const SolverState& s) {
    const double m = fista_momentum(s.t);
    return lincomb(1.0 + m, s.x, -m, s.x_prev);
}

// ---------------------------------------------------------------------------
// Steps
// ---------------------------------------------------------------------------

inline DenseVector proximal_gradient_step(const ProblemSpec& p, const DenseVector& v, double gamma) {
    require(gamma > 0.0, "bad-step", "step size must be positive");
    const DenseVector g = p.f1_grad(v);
    require(g.all_finite(), "diverged", "non-finite gradient");
    return p.prox_f2(axpy(-gamma, g, v), gamma);
}

/// Largest gamma0·shrinkᵏ whose prox step satisfies the quadratic upper
/// bound f1(x) ≤ f1(v) + ⟨∇f1(v), x−v⟩ + ‖x−v‖²/(2γ).
inline double backtracking_gamma(const ProblemSpec& p, const DenseVector& v, double gamma0, double shrink) {
    require(gamma0 > 0.0, "bad-step", "gamma0 must be positive");
    require(shrink > 0.0 && shrink < 1.0, "bad-step", "shrink must lie in (0, 1)");
    const DenseVector g = p.f1_grad(v);
    require(g.all_finite(), "diverged", "non-finite gradient");
    const double fv = p.f1_value(v);
    double gamma = gamma0;
    for (int k = 0; k <= 60; ++k) {
        const DenseVector x = p.prox_f2(axpy(-gamma, g, v), gamma);
        DenseVector d = axpy(-1.0, v, x);
        const double model = fv + dot(g, d) + norm2_sq(d) / (2.0 * gamma);
        const double fx = p.f1_value(x);
        if (fx <= model + 1e-12 * (1.0 + std::abs(fv))) return gamma;
        gamma *= shrink;
    }
    throw Error("step-underflow", "backtracking exceeded 60 reductions");
}

/// θ with f(θx) ≤ f(x). Falls back to 1 whenever the hook is absent, x = 0,
/// the hook returns a non-positive or non-finite value, or the candidate does
/// not decrease f. `f_x` is f(x) if the caller already has it.
struct ThetaResult {
    double theta = 1.0;
    double f_theta_x = 0.0;
};

inline ThetaResult theta_line_search(const ProblemSpec& p, const DenseVector& x, double f_x) {
    ThetaResult r{1.0, f_x};
    if (!p.theta_search || norm2_sq(x) == 0.0) return r;
    const double theta = p.theta_search(x);
    if (!std::isfinite(theta) || theta <= 0.0 || theta == 1.0) return r;
    const double f_theta = p.value(scale(theta, x));
    if (std::isfinite(f_theta) && f_theta <= f_x) {
        r.theta = theta;
        r.f_theta_x = f_theta;
    }
    return r;
}

inline double theta_line_search(const ProblemSpec& p, const DenseVector& x) {
    return theta_line_search(p, x, p.value(x)).theta;
}

/// 1 − min(|a|,|b|)/max(|a|,|b|) ≤ tol, with both-near-zero counting as done.
inline bool relative_change_converged(double f_prev, double f_cur, double tol) {
    const double a = std::abs(f_prev), b = std::abs(f_cur);
    if (a < 1e-15 && b < 1e-15) return true;
    return 1.0 - std::min(a, b) / std::max(a, b) <= tol;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

/// Runs FISTA or RAPID from x0. RAPID rules return θ_T·x_T.
inline SolveResult solve(const ProblemSpec& p, const SolverConfig& cfg, const DenseVector& x0) {
    require(x0.size() == p.dim, "shape", "x0 length does not match problem dimension");
    require(cfg.max_iter >= 1, "bad-config", "max_iter must be at least 1");
    require(cfg.rel_tol > 0.0, "bad-config", "rel_tol must be positive");

    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const bool rapid = cfg.rule != Rule::Fista;

    SolverState s;
    s.x = x0;
    s.x_prev = x0;
    s.v = x0;
    s.theta = s.theta_prev = 1.0;
    s.eta = s.eta_prev = 1.0;
    s.gamma = p.lipschitz > 0.0 ? 1.0 / p.lipschitz : 1.0;

    SolveResult out;
    double f_prev = p.value(x0);
    require(std::isfinite(f_prev), "diverged", "objective is non-finite at x0");

    for (std::size_t t = 1; t <= cfg.max_iter; ++t) {
        if (cfg.step_policy == StepPolicy::Backtracking)
            s.gamma = backtracking_gamma(p, s.v, s.gamma, cfg.backtrack_shrink);

        DenseVector x_new = proximal_gradient_step(p, s.v, s.gamma);
        const double f_x = p.value(x_new);
        require(std::isfinite(f_x) && x_new.all_finite(), "diverged",
                "objective became non-finite at iteration " + std::to_string(t));

        ThetaResult th{1.0, f_x};
        if (rapid) th = theta_line_search(p, x_new, f_x);

        s.x_prev = std::move(s.x);
        s.x = std::move(x_new);
        s.theta_prev = s.theta;
        s.theta = th.theta;
        s.eta_prev = s.eta;
        s.eta = eta_next(s.eta_prev);
        s.t = t;

        switch (cfg.rule) {
        case Rule::Fista: s.v = aux_update_fista(s); break;
        case Rule::RapidI: s.v = aux_update_rapid1(s); break;
        case Rule::RapidII: s.v = aux_update_rapid2(s); break;
        }

        if (cfg.record_trace) {
            IterationRecord rec;
            rec.t = t;
            rec.f_x = f_x;
            rec.f_theta_x = th.f_theta_x;
            rec.theta = s.theta;
            rec.eta = s.eta;
            rec.gamma = s.gamma;
            if (cfg.record_timing)
                rec.elapsed_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - start).count();
            out.trace.push_back(rec);
            const double gap = 1.0 - s.theta;
            out.theta_gap_sq.push_back(gap * gap * norm2_sq(s.x));
        }

        out.iterations = t;
        const double f_cur = th.f_theta_x;
        if (relative_change_converged(f_prev, f_cur, cfg.rel_tol)) {
            out.converged = true;
            break;
        }
        f_prev = f_cur;
    }

    out.solution = rapid ? scale(s.theta, s.x) : s.x;
    return out;
}

} // namespace rapid
