#ifndef WMDX_SIMILARITY_HPP
#define WMDX_SIMILARITY_HPP

#include <span>
#include <string>
#include <vector>

#include "wmdx/error.hpp"
#include "wmdx/geometry.hpp"
#include "wmdx/matrix.hpp"
#include "wmdx/measures.hpp"

namespace wmdx {

enum class VariantKind {
    Wmd,
    WmdTfidf,
    Wrd,
    Opt1,
    Opt2,
};

const char* variant_kind_name(VariantKind kind) noexcept;

/// A document-distance configuration. WRD is defined over cosine costs, so
/// make() pins its geometry; other variants combine with any geometry.
struct Variant {
    VariantKind kind = VariantKind::Wmd;
    Geometry geometry;
    bool opt1_raw_counts = false; // read min(a, b) over raw counts instead of nbow weights

    static Variant make(VariantKind kind, Geometry geometry);
};

/// Distance between two resolved documents under the given variant.
/// Symmetric; zero for identical documents.
double document_distance(const Document& a, const Document& b, const EmbeddingTable& table,
                         const Variant& variant, const IdfTable* idf = nullptr);

enum class PairErrorPolicy {
    FailFast,         // rethrow the lowest-indexed failure
    SkipWithSentinel, // leave NaN in failed entries, report them
};

struct PairFailure {
    std::size_t row;
    std::size_t col;
    ErrorKind kind;
    std::string message;
};

struct DistanceMatrixResult {
    Matrix distances;
    std::vector<PairFailure> failures; // empty under FailFast
};

/// Entry [i][j] = document_distance(docs_a[i], docs_b[j], ...). Entries are
/// computed in parallel; results do not depend on the worker count. When
/// both spans view the same documents, only the upper triangle is computed
/// and mirrored, giving an exactly symmetric matrix with zero diagonal.
DistanceMatrixResult distance_matrix(std::span<const Document> docs_a,
                                     std::span<const Document> docs_b,
                                     const EmbeddingTable& table, const Variant& variant,
                                     const IdfTable* idf = nullptr,
                                     PairErrorPolicy policy = PairErrorPolicy::FailFast,
                                     unsigned threads = 0);

} // namespace wmdx

#endif
