#pragma once

#include <cmath>
#include <memory>
#include <optional>

#include "rapid/prox.hpp"
#include "rapid/solver.hpp"

namespace rapid {

/// Least-squares regression data. Vector problems use `y`; the trace-norm
/// problem uses `y_multi` (one column per task).
struct RegressionData {
    DenseMatrix a;
    DenseVector y;
    DenseMatrix y_multi;
    double lambda = 0.0;
    std::optional<GroupPartition> groups;
};

/// Tolerance used when estimating L for the shipped problems.
inline constexpr double kLipschitzTol = 1e-10;

/// Default regularization weight: a tenth of the critical λ, 0.1·‖Aᵀy‖∞.
inline double default_lambda(const DenseMatrix& a, const DenseVector& y) {
    return 0.1 * norm_inf(matvec_t(a, y));
}

namespace detail {

inline void check_vector_data(const RegressionData& d) {
    require(d.a.rows() == d.y.size(), "shape", "A rows do not match y length");
    require(d.lambda >= 0.0, "bad-lambda", "lambda must be non-negative");
}

// Shared least-squares pieces for the vector problems.
inline ProblemSpec least_squares_base(std::shared_ptr<const RegressionData> d) {
    ProblemSpec p;
    p.dim = d->a.cols();
    p.lipschitz = spectral_norm_sq(d->a, kLipschitzTol).value;
    p.f1_value = [d](const DenseVector& x) {
        const DenseVector r = axpy(-1.0, d->y, matvec(d->a, x));
        return 0.5 * norm2_sq(r);
    };
    p.f1_grad = [d](const DenseVector& x) {
        return matvec_t(d->a, axpy(-1.0, d->y, matvec(d->a, x)));
    };
    return p;
}

// θ = (yᵀAx − f2(x))/‖Ax‖², valid for any f2 that is positively homogeneous.
inline std::function<double(const DenseVector&)>
homogeneous_theta(std::shared_ptr<const RegressionData> d, std::function<double(const DenseVector&)> f2) {
    return [d, f2 = std::move(f2)](const DenseVector& x) {
        const DenseVector ax = matvec(d->a, x);
        const double denom = norm2_sq(ax);
        if (denom < 1e-24) return 1.0;
        return (dot(d->y, ax) - f2(x)) / denom;
    };
}

} // namespace detail

/// ½‖Ax−y‖² + λ‖x‖₁
inline ProblemSpec build_lasso(RegressionData data) {
    detail::check_vector_data(data);
    require(!data.groups, "bad-partition", "build_lasso does not take groups");
    auto d = std::make_shared<const RegressionData>(std::move(data));
    ProblemSpec p = detail::least_squares_base(d);
    const double lambda = d->lambda;
    p.f2_value = [lambda](const DenseVector& x) { return lambda * norm1(x); };
    p.prox_f2 = [lambda](const DenseVector& u, double gamma) { return prox_l1(u, lambda * gamma); };
    p.theta_search = detail::homogeneous_theta(d, p.f2_value);
    return p;
}

/// ½‖Ax−y‖² + λ Σ_g ‖x^(g)‖₂
inline ProblemSpec build_group_lasso(RegressionData data) {
    detail::check_vector_data(data);
    require(data.groups.has_value(), "bad-partition", "build_group_lasso requires groups");
    require(data.groups->dim() == data.a.cols(), "bad-partition", "partition dimension does not match A");
    auto d = std::make_shared<const RegressionData>(std::move(data));
    ProblemSpec p = detail::least_squares_base(d);
    const double lambda = d->lambda;
    p.f2_value = [d, lambda](const DenseVector& x) { return lambda * group_l2_norm(x, *d->groups); };
    p.prox_f2 = [d, lambda](const DenseVector& u, double gamma) {
        return prox_group_l2(u, lambda * gamma, *d->groups);
    };
    p.theta_search = detail::homogeneous_theta(d, p.f2_value);
    return p;
}

/// View a flattened (column-major) d×M variable as a matrix.
inline DenseMatrix unflatten(const DenseVector& x, std::size_t rows, std::size_t cols) {
    require(x.size() == rows * cols, "shape", "flattened length does not match rows*cols");
    return DenseMatrix(rows, cols, x.values());
}

inline DenseVector flatten(const DenseMatrix& m) { return DenseVector(m.values()); }

/// ½Σ_j‖Ax_j−y_j‖² + λ‖X‖_* over X (d×M) carried flattened column-major.
inline ProblemSpec build_trace_norm(RegressionData data) {
    require(data.y_multi.rows() > 0 && data.y_multi.cols() > 0, "shape", "trace-norm problem needs y_multi");
    require(data.a.rows() == data.y_multi.rows(), "shape", "A rows do not match Y rows");
    require(data.lambda >= 0.0, "bad-lambda", "lambda must be non-negative");
    auto d = std::make_shared<const RegressionData>(std::move(data));
    const std::size_t dim = d->a.cols();
    const std::size_t tasks = d->y_multi.cols();

    ProblemSpec p;
    p.dim = dim * tasks;
    p.lipschitz = spectral_norm_sq(d->a, kLipschitzTol).value;
    // A·X - Y
    auto residual = [d, dim, tasks](const DenseVector& x) {
        DenseMatrix r = gemm(d->a, unflatten(x, dim, tasks));
        for (std::size_t k = 0; k < r.size(); ++k) r.data()[k] -= d->y_multi.data()[k];
        return r;
    };
    p.f1_value = [residual](const DenseVector& x) {
        const DenseMatrix r = residual(x);
        const double f = frobenius(r);
        return 0.5 * f * f;
    };
    p.f1_grad = [d, residual](const DenseVector& x) { return flatten(gemm(d->a, residual(x), true)); };
    const double lambda = d->lambda;
    p.f2_value = [lambda, dim, tasks](const DenseVector& x) {
        return lambda == 0.0 ? 0.0 : lambda * trace_norm(unflatten(x, dim, tasks));
    };
    p.prox_f2 = [lambda, dim, tasks](const DenseVector& u, double gamma) {
        if (lambda == 0.0 || gamma == 0.0) return u;
        return flatten(prox_trace(unflatten(u, dim, tasks), lambda * gamma));
    };
    p.theta_search = [d, dim, tasks, f2 = p.f2_value](const DenseVector& x) {
        const DenseMatrix ax = gemm(d->a, unflatten(x, dim, tasks));
        const double nrm = frobenius(ax);
        const double denom = nrm * nrm;
        if (denom < 1e-24) return 1.0;
        double fit = 0.0;
        for (std::size_t k = 0; k < ax.size(); ++k) fit += ax.data()[k] * d->y_multi.data()[k];
        return (fit - f2(x)) / denom;
    };
    return p;
}

} // namespace rapid
