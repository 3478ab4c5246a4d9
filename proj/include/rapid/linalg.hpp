#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rapid/error.hpp"

namespace rapid {

class DenseVector {
public:
    DenseVector() = default;
    explicit DenseVector(std::size_t n, double fill = 0.0) : data_(n, fill) {}
    DenseVector(std::initializer_list<double> values) : data_(values) {}
    explicit DenseVector(std::vector<double> values) : data_(std::move(values)) {}

    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> span() noexcept { return data_; }
    std::span<const double> span() const noexcept { return data_; }

    auto begin() noexcept { return data_.begin(); }
    auto end() noexcept { return data_.end(); }
    auto begin() const noexcept { return data_.begin(); }
    auto end() const noexcept { return data_.end(); }

    const std::vector<double>& values() const noexcept { return data_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const DenseVector&, const DenseVector&) = default;

private:
    std::vector<double> data_;
};

/// Column-major dense matrix.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> col_major)
        : rows_(rows), cols_(cols), data_(std::move(col_major)) {
        require(data_.size() == rows_ * cols_, "shape", "matrix storage does not match rows*cols");
    }

    /// Build from a row-wise literal, e.g. from_rows({{1, 2}, {3, 4}}).
    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        const std::size_t r = rows.size();
        const std::size_t c = r ? rows.begin()->size() : 0;
        DenseMatrix m(r, c);
        std::size_t i = 0;
        for (const auto& row : rows) {
            require(row.size() == c, "shape", "ragged row literal");
            std::size_t j = 0;
            for (double v : row) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }

    std::span<double> col(std::size_t j) { return {data_.data() + j * rows_, rows_}; }
    std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    const std::vector<double>& values() const noexcept { return data_; }

    DenseMatrix transposed() const {
        DenseMatrix t(cols_, rows_);
        for (std::size_t j = 0; j < cols_; ++j)
            for (std::size_t i = 0; i < rows_; ++i) t(j, i) = (*this)(i, j);
        return t;
    }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Level-1 utilities
// ---------------------------------------------------------------------------

inline double dot(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "shape", "dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double dot(const DenseVector& a, const DenseVector& b) { return dot(a.span(), b.span()); }

inline double norm2_sq(const DenseVector& x) { return dot(x, x); }
inline double norm2(const DenseVector& x) { return std::sqrt(norm2_sq(x)); }

inline double norm1(const DenseVector& x) {
    double s = 0.0;
    for (double v : x) s += std::abs(v);
    return s;
}

inline double norm_inf(const DenseVector& x) {
    double s = 0.0;
    for (double v : x) s = std::max(s, std::abs(v));
    return s;
}

inline double frobenius(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.values()) s += v * v;
    return std::sqrt(s);
}

/// y <- alpha * x + y
inline void axpy_inplace(double alpha, const DenseVector& x, DenseVector& y) {
    require(x.size() == y.size(), "shape", "axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

/// Returns alpha * x + y.
inline DenseVector axpy(double alpha, const DenseVector& x, const DenseVector& y) {
    DenseVector out = y;
    axpy_inplace(alpha, x, out);
    return out;
}

inline DenseVector scale(double alpha, DenseVector x) {
    for (double& v : x) v *= alpha;
    return x;
}

inline void copy(const DenseVector& src, DenseVector& dst) {
    require(src.size() == dst.size(), "shape", "copy: length mismatch");
    std::copy(src.begin(), src.end(), dst.begin());
}

/// a*x + b*y, the affine combinations the solvers build every iteration.
inline DenseVector lincomb(double a, const DenseVector& x, double b, const DenseVector& y) {
    require(x.size() == y.size(), "shape", "lincomb: length mismatch");
    DenseVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
    return out;
}

// ---------------------------------------------------------------------------
// Level-2/3
// ---------------------------------------------------------------------------

inline DenseVector matvec(const DenseMatrix& a, const DenseVector& x) {
    require(a.cols() == x.size(), "shape",
            "matvec: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                " times length " + std::to_string(x.size()));
    DenseVector y(a.rows());
    for (std::size_t j = 0; j < a.cols(); ++j) {
        const double xj = x[j];
        if (xj == 0.0) continue;
        const auto c = a.col(j);
        for (std::size_t i = 0; i < a.rows(); ++i) y[i] += xj * c[i];
    }
    return y;
}

/// aᵀ·x
inline DenseVector matvec_t(const DenseMatrix& a, const DenseVector& x) {
    require(a.rows() == x.size(), "shape", "matvec_t: row count does not match vector length");
    DenseVector y(a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] = dot(a.col(j), x.span());
    return y;
}

/// a·b, or aᵀ·b when transpose_a is set.
inline DenseMatrix gemm(const DenseMatrix& a, const DenseMatrix& b, bool transpose_a = false) {
    const std::size_t inner = transpose_a ? a.rows() : a.cols();
    const std::size_t out_rows = transpose_a ? a.cols() : a.rows();
    require(inner == b.rows(), "shape", "gemm: inner dimensions disagree");
    DenseMatrix c(out_rows, b.cols());
    for (std::size_t j = 0; j < b.cols(); ++j) {
        auto cj = c.col(j);
        const auto bj = b.col(j);
        if (transpose_a) {
            for (std::size_t i = 0; i < out_rows; ++i) cj[i] = dot(a.col(i), bj);
        } else {
            for (std::size_t k = 0; k < inner; ++k) {
                const double bkj = bj[k];
                if (bkj == 0.0) continue;
                const auto ak = a.col(k);
                for (std::size_t i = 0; i < out_rows; ++i) cj[i] += bkj * ak[i];
            }
        }
    }
    return c;
}

// ---------------------------------------------------------------------------
// Spectral norm
// ---------------------------------------------------------------------------

struct SpectralEstimate {
    double value = 0.0;  // largest eigenvalue of aᵀa
    std::size_t iterations = 0;
    bool converged = false;
};

/// Power iteration on aᵀa from the normalized all-ones vector. The returned
/// value is the Lipschitz constant of x -> aᵀ(ax - y).
inline SpectralEstimate spectral_norm_sq(const DenseMatrix& a, double tol = 1e-8,
                                         std::size_t max_iter = 5000) {
    require(a.rows() > 0 && a.cols() > 0, "shape", "spectral_norm_sq: empty matrix");
    require(tol > 0.0, "bad-tolerance", "spectral_norm_sq: tol must be positive");

    const std::size_t n = a.cols();
    DenseVector x(n, 1.0 / std::sqrt(static_cast<double>(n)));
    DenseVector ax = matvec(a, x);
    if (norm2_sq(ax) == 0.0) {
        // all-ones lies in the null space; fall back to a ramp start
        for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i + 1);
        const double xn = norm2(x);
        x = scale(1.0 / xn, std::move(x));
        ax = matvec(a, x);
    }

    SpectralEstimate est;
    est.value = norm2_sq(ax);
    for (std::size_t it = 1; it <= max_iter; ++it) {
        DenseVector z = matvec_t(a, ax);
        const double zn = norm2(z);
        est.iterations = it;
        if (zn == 0.0) {
            est.value = 0.0;
            est.converged = true;
            return est;
        }
        x = scale(1.0 / zn, std::move(z));
        ax = matvec(a, x);
        const double next = norm2_sq(ax);
        const bool done = std::abs(next - est.value) <= tol * next;
        est.value = std::max(est.value, next);
        if (done) {
            est.converged = true;
            return est;
        }
    }
    return est;
}

// ---------------------------------------------------------------------------
// Thin SVD (one-sided Jacobi)
// ---------------------------------------------------------------------------

struct SvdResult {
    DenseMatrix p;       // rows x n, orthonormal columns
    DenseVector sigma;   // n, nonincreasing
    DenseMatrix q;       // cols x n, orthonormal columns
};

namespace detail {

// Fill columns [first, n) of m with unit vectors orthogonal to every earlier column.
inline void complete_orthonormal(DenseMatrix& m, std::size_t first) {
    const std::size_t rows = m.rows();
    std::size_t probe = 0;
    for (std::size_t j = first; j < m.cols(); ++j) {
        for (;; ++probe) {
            require(probe < rows, "svd-no-converge", "cannot complete orthonormal basis");
            std::vector<double> v(rows, 0.0);
            v[probe] = 1.0;
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t k = 0; k < j; ++k) {
                    const double c = dot(m.col(k), std::span<const double>(v));
                    for (std::size_t i = 0; i < rows; ++i) v[i] -= c * m(i, k);
                }
            }
            double nv = 0.0;
            for (double e : v) nv += e * e;
            nv = std::sqrt(nv);
            if (nv > 1e-6) {
                for (std::size_t i = 0; i < rows; ++i) m(i, j) = v[i] / nv;
                ++probe;
                break;
            }
        }
    }
}

// Requires u.rows() >= u.cols().
inline SvdResult jacobi_svd_tall(const DenseMatrix& u) {
    const std::size_t m = u.rows();
    const std::size_t n = u.cols();
    DenseMatrix w = u;
    DenseMatrix v = DenseMatrix::identity(n);
    const double eps = 4.0 * static_cast<double>(m) * std::numeric_limits<double>::epsilon();

    double total = 0.0;
    for (double x : w.values()) total += x * x;
    // columns at rounding level of the whole matrix are treated as zero
    const double negligible = eps * eps * total;

    bool converged = (n < 2);
    for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
        std::size_t rotations = 0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                auto wi = w.col(i);
                auto wj = w.col(j);
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (std::size_t k = 0; k < m; ++k) {
                    alpha += wi[k] * wi[k];
                    beta += wj[k] * wj[k];
                    gamma += wi[k] * wj[k];
                }
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
                if (alpha <= negligible || beta <= negligible) continue;
                ++rotations;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t k = 0; k < m; ++k) {
                    const double a = wi[k], b = wj[k];
                    wi[k] = c * a - s * b;
                    wj[k] = s * a + c * b;
                }
                auto vi = v.col(i);
                auto vj = v.col(j);
                for (std::size_t k = 0; k < n; ++k) {
                    const double a = vi[k], b = vj[k];
                    vi[k] = c * a - s * b;
                    vj[k] = s * a + c * b;
                }
            }
        }
        converged = (rotations == 0);
    }
    require(converged, "svd-no-converge", "one-sided Jacobi exceeded 100 sweeps");

    std::vector<double> norms(n);
    for (std::size_t j = 0; j < n; ++j) norms[j] = std::sqrt(dot(w.col(j), w.col(j)));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return norms[a] > norms[b]; });

    SvdResult r{DenseMatrix(m, n), DenseVector(n), DenseMatrix(n, n)};
    const double cutoff = (norms.empty() ? 0.0 : norms[order[0]]) * 1e-14;
    std::size_t rank = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t j = order[k];
        r.sigma[k] = norms[j];
        for (std::size_t i = 0; i < n; ++i) r.q(i, k) = v(i, j);
        if (norms[j] > cutoff && norms[j] > 0.0) {
            for (std::size_t i = 0; i < m; ++i) r.p(i, k) = w(i, j) / norms[j];
            rank = k + 1;
        }
    }
    // numerically null directions carry no weight; give them an orthonormal basis
    if (rank < n) complete_orthonormal(r.p, rank);
    return r;
}

} // namespace detail

/// Thin SVD u = p·diag(sigma)·qᵀ with n = min(rows, cols) singular triplets.
inline SvdResult thin_svd(const DenseMatrix& u) {
    require(u.rows() > 0 && u.cols() > 0, "shape", "thin_svd: empty matrix");
    for (double v : u.values()) require(std::isfinite(v), "non-finite", "thin_svd: non-finite input");
    if (u.rows() >= u.cols()) return detail::jacobi_svd_tall(u);
    SvdResult t = detail::jacobi_svd_tall(u.transposed());
    return {std::move(t.q), std::move(t.sigma), std::move(t.p)};
}

/// p·diag(sigma)·qᵀ
inline DenseMatrix reconstruct(const SvdResult& s) {
    DenseMatrix out(s.p.rows(), s.q.rows());
    for (std::size_t k = 0; k < s.sigma.size(); ++k) {
        const double sk = s.sigma[k];
        if (sk == 0.0) continue;
        for (std::size_t j = 0; j < out.cols(); ++j) {
            const double f = sk * s.q(j, k);
            for (std::size_t i = 0; i < out.rows(); ++i) out(i, j) += f * s.p(i, k);
        }
    }
    return out;
}

} // namespace rapid
