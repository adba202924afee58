#include "wmdx/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "wmdx/error.hpp"

namespace wmdx {

namespace {

constexpr double kBallBoundary = 1.0 - 1e-9;

void check_same_dimension(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "vectors have dimensions " + std::to_string(u.size()) + " and " +
                        std::to_string(v.size()));
    }
}

double squared_norm(std::span<const double> u) {
    double s = 0.0;
    for (double x : u) s += x * x;
    return s;
}

double dot(std::span<const double> u, std::span<const double> v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

// Rejects exactly when the positive-definiteness check fails; the factor
// itself is discarded.
bool cholesky_succeeds(std::size_t d, const std::vector<double>& m) {
    std::vector<double> chol(m);
    for (std::size_t k = 0; k < d; ++k) {
        double diag = chol[k * d + k];
        for (std::size_t p = 0; p < k; ++p) diag -= chol[k * d + p] * chol[k * d + p];
        if (!(diag > 0.0)) return false;
        const double root = std::sqrt(diag);
        chol[k * d + k] = root;
        for (std::size_t i = k + 1; i < d; ++i) {
            double val = chol[i * d + k];
            for (std::size_t p = 0; p < k; ++p) val -= chol[i * d + p] * chol[k * d + p];
            chol[i * d + k] = val / root;
        }
    }
    return true;
}

} // namespace

const char* geometry_kind_name(GeometryKind kind) noexcept {
    switch (kind) {
        case GeometryKind::EuclideanSquared: return "euclidean";
        case GeometryKind::PoincareBall: return "poincare";
        case GeometryKind::Cosine: return "cosine";
        case GeometryKind::FisherCosine: return "fisher";
    }
    return "unknown";
}

FisherMatrix::FisherMatrix(std::size_t dimension, std::vector<double> entries)
    : dimension_(dimension), entries_(std::move(entries)) {
    if (dimension_ == 0 || entries_.size() != dimension_ * dimension_) {
        throw Error(ErrorKind::DimensionMismatch, "metric entries do not form a square matrix");
    }
    for (double v : entries_) {
        if (!std::isfinite(v)) {
            throw Error(ErrorKind::InvalidArgument, "metric entries must be finite");
        }
    }
    for (std::size_t i = 0; i < dimension_; ++i) {
        for (std::size_t j = i + 1; j < dimension_; ++j) {
            if (std::abs(entries_[i * dimension_ + j] - entries_[j * dimension_ + i]) > 1e-9) {
                throw Error(ErrorKind::InvalidArgument,
                            "metric is not symmetric at (" + std::to_string(i) + ", " +
                                std::to_string(j) + ")");
            }
        }
    }
    if (!cholesky_succeeds(dimension_, entries_)) {
        throw Error(ErrorKind::InvalidArgument, "metric is not positive definite");
    }
}

FisherMatrix FisherMatrix::identity(std::size_t dimension) {
    std::vector<double> entries(dimension * dimension, 0.0);
    for (std::size_t i = 0; i < dimension; ++i) entries[i * dimension + i] = 1.0;
    return FisherMatrix(dimension, std::move(entries));
}

double FisherMatrix::quad(std::span<const double> u, std::span<const double> v) const {
    // Diagonal plus paired off-diagonal terms; every term is symmetric in
    // (u, v), so the result is exactly symmetric.
    double s = 0.0;
    for (std::size_t i = 0; i < dimension_; ++i) {
        s += entries_[i * dimension_ + i] * (u[i] * v[i]);
        for (std::size_t j = i + 1; j < dimension_; ++j) {
            s += entries_[i * dimension_ + j] * (u[i] * v[j] + u[j] * v[i]);
        }
    }
    return s;
}

FisherMatrix load_fisher_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open metric file " + path.string());
    }
    std::size_t d = 0;
    if (!(in >> d) || d == 0) {
        throw Error(ErrorKind::HeaderParseError,
                    "metric file must start with a positive dimension");
    }
    std::vector<double> entries(d * d);
    for (auto& v : entries) {
        if (!(in >> v)) {
            throw Error(ErrorKind::TruncatedFile,
                        "metric file ends before " + std::to_string(d * d) + " entries");
        }
    }
    return FisherMatrix(d, std::move(entries));
}

double euclidean_sq_cost(std::span<const double> u, std::span<const double> v) {
    check_same_dimension(u, v);
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double d = u[i] - v[i];
        s += d * d;
    }
    return s;
}

double poincare_cost(std::span<const double> u, std::span<const double> v) {
    check_same_dimension(u, v);
    const double nu = squared_norm(u);
    const double nv = squared_norm(v);
    if (nu >= kBallBoundary * kBallBoundary || nv >= kBallBoundary * kBallBoundary) {
        throw Error(ErrorKind::OutsideBall, "vector norm reaches the unit ball boundary");
    }
    const double diff = euclidean_sq_cost(u, v);
    const double x = 2.0 * diff / ((1.0 - nu) * (1.0 - nv));
    // acosh(1 + x) written to stay accurate for small x.
    return std::log1p(x + std::sqrt(x * (x + 2.0)));
}

double cosine_cost(std::span<const double> u, std::span<const double> v) {
    check_same_dimension(u, v);
    const double nu2 = squared_norm(u);
    const double nv2 = squared_norm(v);
    if (nu2 == 0.0 || nv2 == 0.0) {
        throw Error(ErrorKind::ZeroVector, "cosine cost needs nonzero vectors");
    }
    // sqrt of the product (not the product of roots) makes the cost of a
    // vector with itself exactly zero.
    return std::clamp(1.0 - dot(u, v) / std::sqrt(nu2 * nv2), 0.0, 2.0);
}

double fisher_cosine_cost(std::span<const double> u, std::span<const double> v,
                          const FisherMatrix& metric) {
    check_same_dimension(u, v);
    if (u.size() != metric.dimension()) {
        throw Error(ErrorKind::DimensionMismatch,
                    "vectors have dimension " + std::to_string(u.size()) + " but the metric is " +
                        std::to_string(metric.dimension()) + "-dimensional");
    }
    const double nu2 = metric.quad(u, u);
    const double nv2 = metric.quad(v, v);
    if (!(nu2 >= 1e-24) || !(nv2 >= 1e-24)) { // metric norm below 1e-12
        throw Error(ErrorKind::ZeroVector, "vector has (near) zero metric norm");
    }
    return std::clamp(1.0 - metric.quad(u, v) / std::sqrt(nu2 * nv2), 0.0, 2.0);
}

CostMatrix build_cost_matrix(std::span<const std::uint32_t> words_a,
                             std::span<const std::uint32_t> words_b, const EmbeddingTable& table,
                             const Geometry& geometry) {
    if (geometry.kind == GeometryKind::FisherCosine && !geometry.fisher) {
        throw Error(ErrorKind::InvalidArgument, "fisher geometry needs an attached metric");
    }
    CostMatrix out(words_a.size(), words_b.size());
    for (std::size_t i = 0; i < words_a.size(); ++i) {
        const auto u = table.vector(words_a[i]);
        for (std::size_t j = 0; j < words_b.size(); ++j) {
            const auto v = table.vector(words_b[j]);
            try {
                switch (geometry.kind) {
                    case GeometryKind::EuclideanSquared: {
                        const double sq = euclidean_sq_cost(u, v);
                        out(i, j) = geometry.euclidean_power == 1 ? std::sqrt(sq) : sq;
                        break;
                    }
                    case GeometryKind::PoincareBall:
                        out(i, j) = poincare_cost(u, v);
                        break;
                    case GeometryKind::Cosine:
                        out(i, j) = cosine_cost(u, v);
                        break;
                    case GeometryKind::FisherCosine:
                        out(i, j) = fisher_cosine_cost(u, v, *geometry.fisher);
                        break;
                }
            } catch (const Error& e) {
                throw Error(e.kind(), std::string(e.what()) + " (words '" +
                                          table.token(words_a[i]) + "' and '" +
                                          table.token(words_b[j]) + "')");
            }
        }
    }
    return out;
}

} // namespace wmdx
