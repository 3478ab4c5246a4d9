#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "rapid/random.hpp"
#include "rapid/solver.hpp"

// Post-hoc checks of a solver trace against the inequalities the method
// guarantees: the η-schedule identities, descent of the θ-scaling, the
// O(1/T²) rate bound, and the quadratic upper bound that justifies 1/L steps.

namespace rapid {

enum class CheckStatus { Pass, Fail, NotApplicable };

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::Pass;
    bool hard = true;  // soft checks are reported but do not fail an audit
    double worst_violation = 0.0;
    std::size_t iteration = 0;  // where the worst violation occurred (0: none)
    std::string detail;

    bool passed() const { return status != CheckStatus::Fail; }
};

enum class FStarSource { OracleRun, UserSupplied };

struct AuditReport {
    std::vector<CheckResult> checks;
    double f_star_estimate = NAN;
    FStarSource f_star_source = FStarSource::OracleRun;

    bool hard_checks_passed() const {
        for (const auto& c : checks)
            if (c.hard && c.status == CheckStatus::Fail) return false;
        return true;
    }
};

// ---------------------------------------------------------------------------
// Oracle
// ---------------------------------------------------------------------------

struct OracleSolution {
    double f_star = 0.0;
    DenseVector x_star;
};

/// Long fixed-step FISTA run keeping the best iterate seen.
inline OracleSolution estimate_minimum(const ProblemSpec& p, std::size_t budget,
                                       std::optional<DenseVector> x0 = std::nullopt) {
    require(budget > 0, "bad-budget", "oracle budget must be positive");
    SolverState s;
    s.x = x0 ? *x0 : DenseVector(p.dim);
    s.x_prev = s.x;
    s.v = s.x;
    const double gamma = p.lipschitz > 0.0 ? 1.0 / p.lipschitz : 1.0;

    OracleSolution best{p.value(s.x), s.x};
    for (std::size_t t = 1; t <= budget; ++t) {
        DenseVector x = proximal_gradient_step(p, s.v, gamma);
        const double f = p.value(x);
        require(std::isfinite(f), "diverged", "oracle objective became non-finite");
        s.x_prev = std::move(s.x);
        s.x = std::move(x);
        s.t = t;
        s.v = aux_update_fista(s);
        if (f < best.f_star) {
            best.f_star = f;
            best.x_star = s.x;
        }
    }
    return best;
}

inline double estimate_f_star(const ProblemSpec& p, std::size_t budget) {
    return estimate_minimum(p, budget).f_star;
}

// ---------------------------------------------------------------------------
// Checks
// ---------------------------------------------------------------------------

/// (1−η_t)/η_t² = 1/η_{t−1}² (relative 1e-10) and η_t ≤ 2/(t+2) (slack 1e-12),
/// with η₀ = 1 preceding the first record.
inline CheckResult check_eta_sequence(std::span<const IterationRecord> trace) {
    CheckResult r;
    r.name = "eta-sequence";
    double prev = 1.0;
    for (const auto& rec : trace) {
        const double eta = rec.eta;
        double viol = 0.0;
        if (!(eta > 0.0 && eta <= 1.0)) {
            viol = INFINITY;
        } else {
            const double lhs = (1.0 - eta) / (eta * eta);
            const double rhs = 1.0 / (prev * prev);
            const double identity = std::abs(lhs - rhs) / std::max(1.0, rhs);
            viol = std::max(viol, identity > 1e-10 ? identity : 0.0);
            const double bound = 2.0 / (static_cast<double>(rec.t) + 2.0);
            if (eta > bound + 1e-12) viol = std::max(viol, eta - bound);
        }
        if (viol > r.worst_violation) {
            r.worst_violation = viol;
            r.iteration = rec.t;
        }
        prev = eta > 0.0 ? eta : prev;
    }
    if (r.worst_violation > 0.0) r.status = CheckStatus::Fail;
    return r;
}

/// f(θx) ≤ f(x) + 1e-10·(1+|f(x)|) at every record. Not applicable when θ ≡ 1.
inline CheckResult check_theta_descent(std::span<const IterationRecord> trace) {
    CheckResult r;
    r.name = "theta-descent";
    bool any_scaled = false;
    for (const auto& rec : trace) {
        any_scaled = any_scaled || rec.theta != 1.0;
        const double excess = rec.f_theta_x - rec.f_x - 1e-10 * (1.0 + std::abs(rec.f_x));
        if (excess > r.worst_violation) {
            r.worst_violation = excess;
            r.iteration = rec.t;
        }
    }
    if (r.worst_violation > 0.0)
        r.status = CheckStatus::Fail;
    else if (!any_scaled)
        r.status = CheckStatus::NotApplicable;
    return r;
}

/// ε_T = f(θ_T x_T) − f* ≤ 2L‖x*−x₀‖²/(T+1)² + 1e-8 for every T.
///
/// With `theta_gap_sq` (‖x_t − θ_t x_t‖² per iteration) the tightened form,
/// which subtracts Σ_{t≤T} gap_t/η²_{t−1} inside the bracket, is also
/// evaluated and reported in `detail`. It is only guaranteed for the
/// penalized θ search, so it never affects the status.
inline CheckResult check_rate_bound(std::span<const IterationRecord> trace, double f_star, double lipschitz,
                                    const DenseVector& x0, const DenseVector& x_star,
                                    std::span<const double> theta_gap_sq = {}) {
    CheckResult r;
    r.name = "rate-bound";
    r.hard = false;
    const double dist_sq = norm2_sq(axpy(-1.0, x0, x_star));
    double worst_ratio = 0.0;
    double subtracted = 0.0;
    double eta_prev = 1.0;
    std::size_t tight_misses = 0;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        const auto& rec = trace[k];
        const double denom = (static_cast<double>(rec.t) + 1.0);
        const double bound = 2.0 * lipschitz * dist_sq / (denom * denom);
        const double eps = rec.f_theta_x - f_star;
        if (bound > 0.0) worst_ratio = std::max(worst_ratio, eps / bound);
        const double excess = eps - bound - 1e-8;
        if (excess > r.worst_violation) {
            r.worst_violation = excess;
            r.iteration = rec.t;
        }
        if (k < theta_gap_sq.size()) {
            subtracted += theta_gap_sq[k] / (eta_prev * eta_prev);
            const double tight = 2.0 * lipschitz * (dist_sq - subtracted) / (denom * denom);
            if (eps > tight + 1e-8) ++tight_misses;
        }
        eta_prev = rec.eta;
    }
    if (r.worst_violation > 0.0) r.status = CheckStatus::Fail;
    char buf[160];
    std::snprintf(buf, sizeof buf, "worst_ratio=%.6g", worst_ratio);
    r.detail = buf;
    if (!theta_gap_sq.empty()) r.detail += " tightened_misses=" + std::to_string(tight_misses);
    return r;
}

/// f(w) ≤ f1(v) + ⟨∇f1(v), w−v⟩ + f2(w) + (L/2)‖w−v‖² on random normal pairs.
inline CheckResult check_sandwich(const ProblemSpec& p, std::size_t samples, std::uint64_t seed = 0,
                                  double spread = 1.0) {
    CheckResult r;
    r.name = "sandwich";
    RandomStream rng(seed, RandomStream::Test);
    for (std::size_t k = 0; k < samples; ++k) {
        DenseVector w(p.dim), v(p.dim);
        for (std::size_t i = 0; i < p.dim; ++i) w[i] = spread * rng.normal();
        for (std::size_t i = 0; i < p.dim; ++i) v[i] = spread * rng.normal();
        const DenseVector d = axpy(-1.0, v, w);
        const double fw = p.value(w);
        const double upper = p.f1_value(v) + dot(p.f1_grad(v), d) + p.f2_value(w) + 0.5 * p.lipschitz * norm2_sq(d);
        const double excess = fw - upper - 1e-8 * (1.0 + std::abs(fw));
        if (excess > r.worst_violation) {
            r.worst_violation = excess;
            r.iteration = k + 1;
        }
    }
    if (r.worst_violation > 0.0) r.status = CheckStatus::Fail;
    return r;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

inline const char* status_label(const CheckResult& c) {
    switch (c.status) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::NotApplicable: return "n/a";
    case CheckStatus::Fail: return c.hard ? "FAIL" : "flag";
    }
    return "?";
}

inline std::string render_text(const AuditReport& report) {
    std::ostringstream os;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-16s %-6s %-5s %-14s %-9s %s\n", "check", "status", "hard", "worst", "iter",
                  "detail");
    os << buf;
    for (const auto& c : report.checks) {
        std::snprintf(buf, sizeof buf, "%-16s %-6s %-5s %-14.6g %-9zu %s\n", c.name.c_str(), status_label(c),
                      c.hard ? "yes" : "no", c.worst_violation, c.iteration, c.detail.c_str());
        os << buf;
    }
    if (std::isfinite(report.f_star_estimate)) {
        std::snprintf(buf, sizeof buf, "f_star=%.17g (%s)\n", report.f_star_estimate,
                      report.f_star_source == FStarSource::OracleRun ? "oracle run" : "user supplied");
        os << buf;
    }
    os << (report.hard_checks_passed() ? "audit: PASS\n" : "audit: FAIL\n");
    return os.str();
}

/// One `key=value` line per field, prefixed by the check name.
inline std::string render_key_value(const AuditReport& report) {
    std::ostringstream os;
    char buf[256];
    for (const auto& c : report.checks) {
        std::snprintf(buf, sizeof buf, "%s.status=%s\n%s.hard=%d\n%s.worst_violation=%.17g\n%s.iteration=%zu\n",
                      c.name.c_str(), status_label(c), c.name.c_str(), c.hard ? 1 : 0, c.name.c_str(),
                      c.worst_violation, c.name.c_str(), c.iteration);
        os << buf;
        if (!c.detail.empty()) os << c.name << ".detail=" << c.detail << '\n';
    }
    if (std::isfinite(report.f_star_estimate)) {
        std::snprintf(buf, sizeof buf, "f_star=%.17g\nf_star_source=%s\n", report.f_star_estimate,
                      report.f_star_source == FStarSource::OracleRun ? "oracle_run" : "user_supplied");
        os << buf;
    }
    os << "passed=" << (report.hard_checks_passed() ? 1 : 0) << '\n';
    return os.str();
}

} // namespace rapid
