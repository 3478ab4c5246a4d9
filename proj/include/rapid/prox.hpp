#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "rapid/linalg.hpp"

// Proximity operators. Thresholds arrive already scaled (regularization
// weight times step size); the operators themselves hold no state.

namespace rapid {

/// Non-overlapping groups covering 0..dim-1.
class GroupPartition {
public:
    GroupPartition() = default;

    /// Throws "bad-partition" unless the groups are disjoint and cover 0..dim-1.
    GroupPartition(std::vector<std::vector<std::size_t>> groups, std::size_t dim)
        : groups_(std::move(groups)), dim_(dim) {
        std::vector<char> seen(dim, 0);
        std::size_t covered = 0;
        for (const auto& g : groups_) {
            require(!g.empty(), "bad-partition", "empty group");
            for (std::size_t i : g) {
                require(i < dim, "bad-partition", "index " + std::to_string(i) + " out of range");
                require(!seen[i], "bad-partition", "index " + std::to_string(i) + " appears twice");
                seen[i] = 1;
                ++covered;
            }
        }
        require(covered == dim, "bad-partition", "groups do not cover every coordinate");
    }

    static GroupPartition singletons(std::size_t dim) {
        std::vector<std::vector<std::size_t>> g(dim);
        for (std::size_t i = 0; i < dim; ++i) g[i] = {i};
        return GroupPartition(std::move(g), dim);
    }

    /// Consecutive blocks of `size` (last one may be shorter).
    static GroupPartition contiguous(std::size_t dim, std::size_t size) {
        require(size >= 1, "bad-partition", "group size must be positive");
        std::vector<std::vector<std::size_t>> g;
        for (std::size_t start = 0; start < dim; start += size) {
            std::vector<std::size_t> block;
            for (std::size_t i = start; i < std::min(dim, start + size); ++i) block.push_back(i);
            g.push_back(std::move(block));
        }
        return GroupPartition(std::move(g), dim);
    }

    const std::vector<std::vector<std::size_t>>& groups() const noexcept { return groups_; }
    std::size_t dim() const noexcept { return dim_; }

private:
    std::vector<std::vector<std::size_t>> groups_;
    std::size_t dim_ = 0;
};

inline double soft_threshold(double u, double t) {
    const double mag = std::abs(u) - t;
    if (mag <= 0.0) return 0.0;
    return u >= 0.0 ? mag : -mag;
}

inline DenseVector prox_l1(const DenseVector& u, double t) {
    require(t >= 0.0, "bad-threshold", "prox_l1: negative threshold");
    DenseVector out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = soft_threshold(u[i], t);
    return out;
}

inline double group_l2_norm(const DenseVector& x, const GroupPartition& part) {
    require(part.dim() == x.size(), "bad-partition", "partition dimension does not match vector");
    double s = 0.0;
    for (const auto& g : part.groups()) {
        double sq = 0.0;
        for (std::size_t i : g) sq += x[i] * x[i];
        s += std::sqrt(sq);
    }
    return s;
}

/// Block soft-threshold; a zero-norm group maps to zero.
inline DenseVector prox_group_l2(const DenseVector& u, double t, const GroupPartition& part) {
    require(t >= 0.0, "bad-threshold", "prox_group_l2: negative threshold");
    require(part.dim() == u.size(), "bad-partition", "partition dimension does not match vector");
    DenseVector out(u.size());
    for (const auto& g : part.groups()) {
        double sq = 0.0;
        for (std::size_t i : g) sq += u[i] * u[i];
        const double nrm = std::sqrt(sq);
        if (nrm <= t || nrm == 0.0) continue;
        const double f = (nrm - t) / nrm;
        for (std::size_t i : g) out[i] = f * u[i];
    }
    return out;
}

/// Sum of singular values.
inline double trace_norm(const DenseMatrix& x) {
    bool zero = true;
    for (double v : x.values()) zero = zero && v == 0.0;
    if (zero) return 0.0;
    const SvdResult s = thin_svd(x);
    double total = 0.0;
    for (double v : s.sigma) total += v;
    return total;
}

/// Singular value soft-thresholding.
inline DenseMatrix prox_trace(const DenseMatrix& u, double t) {
    require(t >= 0.0, "bad-threshold", "prox_trace: negative threshold");
    bool zero = true;
    for (double v : u.values()) zero = zero && v == 0.0;
    if (zero) return DenseMatrix(u.rows(), u.cols());
    SvdResult s = thin_svd(u);
    for (double& v : s.sigma) v = std::max(0.0, v - t);
    return reconstruct(s);
}

inline DenseVector project_box(const DenseVector& u, double lo, double hi) {
    require(lo <= hi, "bad-box", "project_box: lo > hi");
    DenseVector out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = std::clamp(u[i], lo, hi);
    return out;
}

inline void check_labels(const DenseVector& y) {
    for (std::size_t i = 0; i < y.size(); ++i)
        require(y[i] == 1.0 || y[i] == -1.0, "bad-labels",
                "label at index " + std::to_string(i) + " is not +1/-1");
}

/// u - (yᵀu/‖y‖₁)·y. For ±1 labels this is the orthogonal projection onto yᵀx = 0.
inline DenseVector project_hyperplane(const DenseVector& u, const DenseVector& y) {
    require(u.size() == y.size(), "shape", "project_hyperplane: length mismatch");
    check_labels(y);
    const double c = dot(y, u) / static_cast<double>(y.size());
    DenseVector out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = u[i] - c * y[i];
    return out;
}

} // namespace rapid
