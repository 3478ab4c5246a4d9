#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "rapid/prox.hpp"
#include "rapid/solver.hpp"

// Dual soft-margin SVM
//
//     min  ½αᵀQα − eᵀα   s.t.  0 ≤ α ≤ C,  yᵀα = 0,   Q = K ⊙ yyᵀ
//
// solved by projected gradient with an exact step, alternating box and
// hyperplane projections, a box-respecting θ scaling and RAPID/FISTA
// extrapolation.

namespace rapid {

struct SvmProblem {
    DenseMatrix q;  // N×N, symmetric PSD
    DenseVector y;  // ±1
    double c = 1.0;

    std::size_t size() const noexcept { return y.size(); }
};

enum class SvmRule { Apg, RapidI, RapidII };

inline std::string_view to_string(SvmRule r) {
    switch (r) {
    case SvmRule::Apg: return "apg";
    case SvmRule::RapidI: return "rapid1";
    case SvmRule::RapidII: return "rapid2";
    }
    return "?";
}

inline SvmRule parse_svm_rule(std::string_view s) {
    if (s == "apg" || s == "fista") return SvmRule::Apg;
    if (s == "rapid1") return SvmRule::RapidI;
    if (s == "rapid2") return SvmRule::RapidII;
    throw Error("bad-rule", "unknown SVM rule '" + std::string(s) + "'");
}

/// How the feasibility loop alternates between the box and the hyperplane.
/// Dykstra carries a correction term for the box step and converges to the
/// Euclidean projection onto the intersection; Plain alternation only
/// reaches some feasible point, which stalls the outer iteration short of
/// the optimum.
enum class FeasibilityMethod { Dykstra, Plain };

struct SvmConfig {
    SvmRule rule = SvmRule::RapidII;
    std::size_t max_iter = 5000;
    double rel_tol = 1e-7;
    double feas_tol = 1e-10;
    std::size_t feas_max_rounds = 10000;
    FeasibilityMethod feasibility = FeasibilityMethod::Dykstra;
    bool record_timing = false;
};

/// Raised when alternating projection cannot reach feas_tol.
class FeasibilityStall : public Error {
public:
    FeasibilityStall(double box_violation, double hyperplane_residual)
        : Error("feasibility-stall", "box violation " + std::to_string(box_violation) +
                                         ", |yᵀα| " + std::to_string(hyperplane_residual)),
          box_violation_(box_violation), hyperplane_residual_(hyperplane_residual) {}

    double box_violation() const noexcept { return box_violation_; }
    double hyperplane_residual() const noexcept { return hyperplane_residual_; }

private:
    double box_violation_;
    double hyperplane_residual_;
};

/// Validates shape, labels, symmetry (1e-10) and positive semidefiniteness
/// (smallest eigenvalue ≥ −1e-8·‖Q‖_F, estimated by power iteration on a
/// shifted matrix).
inline SvmProblem make_svm_problem(DenseMatrix q, DenseVector y, double c) {
    const std::size_t n = y.size();
    require(n >= 1 && q.rows() == n && q.cols() == n, "shape", "Q must be N×N with N = labels");
    require(c >= 0.0 && std::isfinite(c), "bad-c", "C must be finite and non-negative");
    check_labels(y);
    const double fro = frobenius(q);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < j; ++i)
            require(std::abs(q(i, j) - q(j, i)) <= 1e-10 * std::max(1.0, fro), "not-symmetric",
                    "Q is not symmetric at (" + std::to_string(i) + "," + std::to_string(j) + ")");

    // λ_min(Q) = shift − λ_max(shift·I − Q) with a Gershgorin shift
    double shift = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += std::abs(q(i, j));
        shift = std::max(shift, row);
    }
    if (shift > 0.0) {
        DenseMatrix b = q;
        for (double& v : std::span<double>(b.data(), b.size())) v = -v;
        for (std::size_t i = 0; i < n; ++i) b(i, i) += shift;
        // aᵀa = b² for symmetric b, so the square root of the estimate is λ_max(b)
        const double top = std::sqrt(spectral_norm_sq(b, 1e-12, 200).value);
        require(shift - top >= -1e-8 * fro, "not-psd", "Q has a negative eigenvalue");
    }
    return SvmProblem{std::move(q), std::move(y), c};
}

/// K = X·Xᵀ, Q = K ⊙ yyᵀ for samples stored as rows of x.
inline SvmProblem build_linear_kernel(const DenseMatrix& x, const DenseVector& y, double c) {
    require(x.rows() == y.size(), "shape", "one label per sample row required");
    check_labels(y);
    const DenseMatrix xt = x.transposed();
    DenseMatrix q = gemm(xt, xt, true);
    const std::size_t n = y.size();
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) q(i, j) *= y[i] * y[j];
    // exact symmetry despite summation order
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < j; ++i) q(j, i) = q(i, j);
    return make_svm_problem(std::move(q), y, c);
}

inline double svm_objective(const SvmProblem& p, const DenseVector& alpha) {
    require(alpha.size() == p.size(), "shape", "alpha length does not match problem");
    double lin = 0.0;
    for (double a : alpha) lin += a;
    return 0.5 * dot(alpha, matvec(p.q, alpha)) - lin;
}

/// Qv − e projected onto yᵀd = 0.
inline DenseVector projected_gradient_direction(const SvmProblem& p, const DenseVector& v) {
    require(v.size() == p.size(), "shape", "v length does not match problem");
    DenseVector g = matvec(p.q, v);
    for (double& gi : g) gi -= 1.0;
    return project_hyperplane(g, p.y);
}

/// argmin_γ f(v − γ·dv) = (dvᵀQv − eᵀdv)/(dvᵀQdv).
inline double exact_step_size(const SvmProblem& p, const DenseVector& dv, const DenseVector& v) {
    require(dv.size() == p.size() && v.size() == p.size(), "shape", "direction length does not match problem");
    const DenseVector qdv = matvec(p.q, dv);
    const double den = dot(dv, qdv);
    if (!(den > 1e-18)) throw Error("flat-direction", "dvᵀQdv is numerically zero");
    double sum_dv = 0.0;
    for (double d : dv) sum_dv += d;
    return (dot(qdv, v) - sum_dv) / den;
}

struct FeasibilityResiduals {
    double box = 0.0;         // max distance outside [0, C]
    double hyperplane = 0.0;  // |yᵀα|
};

inline FeasibilityResiduals feasibility_residuals(const SvmProblem& p, const DenseVector& alpha) {
    FeasibilityResiduals r;
    for (double a : alpha) r.box = std::max({r.box, -a, a - p.c});
    r.hyperplane = std::abs(dot(p.y, alpha));
    return r;
}

/// Alternate box clamping and hyperplane projection until the clamped
/// iterate satisfies |yᵀα| ≤ tol (and, for Dykstra, has stopped moving).
/// Throws FeasibilityStall after max_rounds.
inline DenseVector alternate_project_feasible(DenseVector alpha, const SvmProblem& p, double tol,
                                              std::size_t max_rounds,
                                              FeasibilityMethod method = FeasibilityMethod::Dykstra) {
    require(p.c >= 0.0, "bad-c", "C must be non-negative");
    require(alpha.size() == p.size(), "shape", "alpha length does not match problem");
    const std::size_t n = p.size();
    const bool dykstra = method == FeasibilityMethod::Dykstra;
    DenseVector correction(n);
    DenseVector boxed(n);
    FeasibilityResiduals res;
    bool reached = false;
    for (std::size_t round = 0; round < max_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double shifted = alpha[i] + correction[i];
            boxed[i] = std::clamp(shifted, 0.0, p.c);
            if (dykstra) correction[i] = shifted - boxed[i];
        }
        const double c = dot(p.y, boxed) / static_cast<double>(n);
        double moved = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double next = boxed[i] - c * p.y[i];
            moved = std::max(moved, std::abs(next - alpha[i]));
            alpha[i] = next;
        }
        // judge the clamped point: clamping can undo up to N·tol of the hyperplane step
        DenseVector clamped = project_box(alpha, 0.0, p.c);
        res.box = feasibility_residuals(p, alpha).box;
        res.hyperplane = feasibility_residuals(p, clamped).hyperplane;
        if (res.hyperplane <= tol && (!dykstra || moved <= tol)) {
            alpha = std::move(clamped);
            reached = true;
            break;
        }
    }
    if (!reached) throw FeasibilityStall(res.box, res.hyperplane);
    return alpha;
}

namespace detail {

// θ from max αᵢ, eᵀα and αᵀQα.
inline double svm_theta_from_moments(double c, double max_a, double lin, double quad) {
    if (max_a <= 0.0) return 1.0;
    const double box_cap = c / max_a;
    double theta;
    if (quad <= 1e-300)
        theta = lin > 0.0 ? box_cap : 1.0;
    else
        theta = std::min(box_cap, lin / quad);
    if (!std::isfinite(theta) || theta <= 0.0) return 1.0;
    return theta;
}

} // namespace detail

/// min{C/maxᵢαᵢ, eᵀα/(αᵀQα)}; returns 1 when maxᵢαᵢ ≤ 0 or the result is not positive.
inline double svm_theta(const SvmProblem& p, const DenseVector& alpha) {
    require(alpha.size() == p.size(), "shape", "alpha length does not match problem");
    double max_a = 0.0, lin = 0.0;
    for (double a : alpha) {
        max_a = std::max(max_a, a);
        lin += a;
    }
    return detail::svm_theta_from_moments(p.c, max_a, lin, dot(alpha, matvec(p.q, alpha)));
}

struct SvmResult {
    DenseVector alpha;  // θ_T·α_T, or the best earlier iterate when the last one increased f
    Trace trace;
    std::size_t iterations = 0;
    bool converged = false;
};

inline SvmResult solve_svm(const SvmProblem& p, const SvmConfig& cfg) {
    require(cfg.max_iter >= 1 && cfg.rel_tol > 0.0 && cfg.feas_tol > 0.0 && cfg.feas_max_rounds >= 1,
            "bad-config", "SVM configuration values must be positive");
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const std::size_t n = p.size();

    // `s` tracks α, `qs` tracks Qα with identical scalars, so Qv comes from
    // the same extrapolation formula without another N×N product.
    SolverState s;
    s.x = DenseVector(n);
    s.x_prev = s.x;
    s.v = s.x;
    SolverState qs = s;

    SvmResult out;
    out.alpha = s.x;
    double best_f = 0.0;  // f(0)
    double f_prev = 0.0;

    for (std::size_t t = 1; t <= cfg.max_iter; ++t) {
        DenseVector grad = qs.v;
        for (double& g : grad) g -= 1.0;
        const DenseVector dv = project_hyperplane(grad, p.y);

        double gamma = 0.0;
        bool flat = false;
        const DenseVector qdv = matvec(p.q, dv);
        const double curvature = dot(dv, qdv);
        if (curvature > 1e-18)
            gamma = dot(dv, grad) / curvature;
        else
            flat = true;

        // The exact step is exact only along dv; once the box clips the move it can
        // overshoot and cycle. Halve until the quadratic upper model at v holds
        // (it holds with equality when nothing is clipped).
        double f_v = 0.0;
        for (std::size_t i = 0; i < n; ++i) f_v += s.v[i] * (0.5 * qs.v[i] - 1.0);
        DenseVector alpha, q_alpha;
        for (int halvings = 0;; ++halvings) {
            alpha = alternate_project_feasible(axpy(-gamma, dv, s.v), p, cfg.feas_tol, cfg.feas_max_rounds,
                                               cfg.feasibility);
            q_alpha = matvec(p.q, alpha);
            if (flat || halvings == 60) break;
            const DenseVector step = axpy(-1.0, s.v, alpha);
            const double f_a = 0.5 * dot(alpha, q_alpha) - std::accumulate(alpha.begin(), alpha.end(), 0.0);
            const double model = f_v + dot(grad, step) + norm2_sq(step) / (2.0 * gamma);
            if (f_a <= model + 1e-12 * (1.0 + std::abs(f_v))) break;
            gamma *= 0.5;
        }
        const double quad = dot(alpha, q_alpha);
        double lin = 0.0, max_a = 0.0;
        for (double a : alpha) {
            lin += a;
            max_a = std::max(max_a, a);
        }
        const double f_alpha = 0.5 * quad - lin;

        double theta = 1.0;
        double f_theta = f_alpha;
        if (cfg.rule != SvmRule::Apg) {
            const double cand = detail::svm_theta_from_moments(p.c, max_a, lin, quad);
            if (cand != 1.0) {
                const double fc = 0.5 * cand * cand * quad - cand * lin;
                if (fc <= f_alpha) {
                    theta = cand;
                    f_theta = fc;
                }
            }
        }
        require(std::isfinite(f_alpha) && std::isfinite(f_theta), "diverged",
                "SVM objective became non-finite at iteration " + std::to_string(t));

        for (SolverState* st : {&s, &qs}) {
            st->theta_prev = st->theta;
            st->theta = theta;
            st->eta_prev = st->eta;
            st->eta = eta_next(st->eta_prev);
            st->t = t;
            st->gamma = gamma;
        }
        s.x_prev = std::move(s.x);
        s.x = std::move(alpha);
        qs.x_prev = std::move(qs.x);
        qs.x = std::move(q_alpha);
        switch (cfg.rule) {
        case SvmRule::Apg:
            s.v = aux_update_fista(s);
            qs.v = aux_update_fista(qs);
            break;
        case SvmRule::RapidI:
            s.v = aux_update_rapid1(s);
            qs.v = aux_update_rapid1(qs);
            break;
        case SvmRule::RapidII:
            s.v = aux_update_rapid2(s);
            qs.v = aux_update_rapid2(qs);
            break;
        }

        // keep the best point; momentum continues from the new iterate regardless
        if (f_theta <= best_f) {
            best_f = f_theta;
            out.alpha = scale(theta, s.x);
        }

        IterationRecord rec;
        rec.t = t;
        rec.f_x = f_alpha;
        rec.f_theta_x = best_f;
        rec.theta = theta;
        rec.eta = s.eta;
        rec.gamma = gamma;
        if (cfg.record_timing)
            rec.elapsed_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - start).count();
        out.trace.push_back(rec);
        out.iterations = t;

        if (flat || relative_change_converged(f_prev, f_theta, cfg.rel_tol)) {
            out.converged = true;
            break;
        }
        f_prev = f_theta;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Reporting helpers for a linear kernel
// ---------------------------------------------------------------------------

/// Bias averaged over free support vectors (0 < α < C); falls back to the
/// midpoint of the feasible interval when there are none.
inline double svm_bias(const SvmProblem& p, const DenseVector& alpha) {
    const DenseVector qa = matvec(p.q, alpha);
    const double eps = 1e-8 * std::max(1.0, p.c);
    double sum = 0.0;
    std::size_t free = 0;
    double lo = -INFINITY, hi = INFINITY;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double b = p.y[i] * (1.0 - qa[i]);  // y_i − w·x_i
        if (alpha[i] > eps && alpha[i] < p.c - eps) {
            sum += b;
            ++free;
        } else if ((alpha[i] <= eps) == (p.y[i] > 0)) {
            lo = std::max(lo, b);
        } else {
            hi = std::min(hi, b);
        }
    }
    if (free > 0) return sum / static_cast<double>(free);
    if (std::isfinite(lo) && std::isfinite(hi)) return 0.5 * (lo + hi);
    if (std::isfinite(lo)) return lo;
    if (std::isfinite(hi)) return hi;
    return 0.0;
}

struct LinearSvmModel {
    DenseVector w;
    double b = 0.0;

    double decision(std::span<const double> x) const { return dot(w.span(), x) + b; }
};

inline LinearSvmModel linear_model(const DenseMatrix& x, const SvmProblem& p, const DenseVector& alpha) {
    LinearSvmModel m{DenseVector(x.cols()), svm_bias(p, alpha)};
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const double c = alpha[i] * p.y[i];
        if (c == 0.0) continue;
        for (std::size_t j = 0; j < x.cols(); ++j) m.w[j] += c * x(i, j);
    }
    return m;
}

inline double accuracy(const LinearSvmModel& m, const DenseMatrix& x, const DenseVector& y) {
    if (x.rows() == 0) return 0.0;
    std::size_t hit = 0;
    std::vector<double> row(x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) row[j] = x(i, j);
        const double s = m.decision(row) >= 0.0 ? 1.0 : -1.0;
        hit += (s == y[i]);
    }
    return static_cast<double>(hit) / static_cast<double>(x.rows());
}

} // namespace rapid
