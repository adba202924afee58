#ifndef WMDX_GEOMETRY_HPP
#define WMDX_GEOMETRY_HPP

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "wmdx/embeddings.hpp"
#include "wmdx/matrix.hpp"

namespace wmdx {

enum class GeometryKind {
    EuclideanSquared,
    PoincareBall,
    Cosine,
    FisherCosine,
};

const char* geometry_kind_name(GeometryKind kind) noexcept;

/// Symmetric positive-definite metric tensor for the tangent-space cosine.
/// Symmetry is checked to 1e-9 and definiteness by a Cholesky factorization
/// at construction.
class FisherMatrix {
public:
    FisherMatrix(std::size_t dimension, std::vector<double> entries);

    static FisherMatrix identity(std::size_t dimension);

    std::size_t dimension() const noexcept { return dimension_; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * dimension_ + j]; }

    /// Quadratic form u^T M v accumulated symmetrically, so that
    /// quad(u, v) == quad(v, u) exactly.
    double quad(std::span<const double> u, std::span<const double> v) const;

private:
    std::size_t dimension_;
    std::vector<double> entries_;
};

/// File format: first line `d`, then d lines of d space-separated reals.
FisherMatrix load_fisher_matrix(const std::filesystem::path& path);

/// A cost-function choice for word-to-word transport costs.
struct Geometry {
    GeometryKind kind = GeometryKind::EuclideanSquared;
    int euclidean_power = 2; // 1 = plain L2 distance, 2 = squared
    std::shared_ptr<const FisherMatrix> fisher; // required for FisherCosine
};

double euclidean_sq_cost(std::span<const double> u, std::span<const double> v);
double poincare_cost(std::span<const double> u, std::span<const double> v);
double cosine_cost(std::span<const double> u, std::span<const double> v);
double fisher_cosine_cost(std::span<const double> u, std::span<const double> v,
                          const FisherMatrix& metric);

/// Pairwise costs between two lists of vocabulary indices. Errors from a
/// single pair are rethrown with the offending tokens named.
CostMatrix build_cost_matrix(std::span<const std::uint32_t> words_a,
                             std::span<const std::uint32_t> words_b, const EmbeddingTable& table,
                             const Geometry& geometry);

} // namespace wmdx

#endif
