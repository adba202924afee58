#include "wmdx/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "wmdx/ot.hpp"
#include "wmdx/parallel.hpp"

namespace wmdx {

namespace {

WeightedBow variant_bow(const Document& doc, const EmbeddingTable& table, const Variant& variant,
                        const IdfTable* idf) {
    WeightedBow bow = build_nbow(doc);
    switch (variant.kind) {
        case VariantKind::Wmd:
        case VariantKind::Opt1:
            return bow;
        case VariantKind::WmdTfidf:
            if (!idf) {
                throw Error(ErrorKind::MissingIdf, "wmd-tfidf needs document frequencies");
            }
            return apply_tfidf(bow, *idf);
        case VariantKind::Wrd:
            return apply_wrd_weights(bow, table);
        case VariantKind::Opt2:
            return apply_opt2_weights(bow, table);
    }
    return bow;
}

/// Weights scaled back to raw counts, for the alternative opt1 reading.
WeightedBow raw_count_bow(const Document& doc) {
    WeightedBow bow;
    bow.indices.reserve(doc.bow.size());
    bow.weights.reserve(doc.bow.size());
    for (const auto& [index, count] : doc.bow) {
        bow.indices.push_back(index);
        bow.weights.push_back(double(count));
    }
    return bow;
}

} // namespace

const char* variant_kind_name(VariantKind kind) noexcept {
    switch (kind) {
        case VariantKind::Wmd: return "wmd";
        case VariantKind::WmdTfidf: return "wmd-tfidf";
        case VariantKind::Wrd: return "wrd";
        case VariantKind::Opt1: return "opt1";
        case VariantKind::Opt2: return "opt2";
    }
    return "unknown";
}

Variant Variant::make(VariantKind kind, Geometry geometry) {
    Variant v;
    v.kind = kind;
    if (kind == VariantKind::Wrd) {
        geometry.kind = GeometryKind::Cosine;
        geometry.fisher.reset();
    }
    v.geometry = std::move(geometry);
    return v;
}

double document_distance(const Document& a, const Document& b, const EmbeddingTable& table,
                         const Variant& variant, const IdfTable* idf) {
    const WeightedBow bow_a = variant_bow(a, table, variant, idf);
    const WeightedBow bow_b = variant_bow(b, table, variant, idf);

    const CostMatrix cost = build_cost_matrix(bow_a.indices, bow_b.indices, table, variant.geometry);
    const TransportPlan plan =
        solve_emd(DiscreteMeasure(bow_a.weights), DiscreteMeasure(bow_b.weights), cost);

    if (variant.kind == VariantKind::Opt1) {
        const double coefficient =
            variant.opt1_raw_counts
                ? opt1_coefficient(raw_count_bow(a), raw_count_bow(b), table)
                : opt1_coefficient(bow_a, bow_b, table);
        return plan.objective / coefficient;
    }
    return plan.objective;
}

DistanceMatrixResult distance_matrix(std::span<const Document> docs_a,
                                     std::span<const Document> docs_b,
                                     const EmbeddingTable& table, const Variant& variant,
                                     const IdfTable* idf, PairErrorPolicy policy,
                                     unsigned threads) {
    const bool self = docs_a.data() == docs_b.data() && docs_a.size() == docs_b.size();
    const std::size_t rows = docs_a.size();
    const std::size_t cols = docs_b.size();

    DistanceMatrixResult result;
    result.distances = Matrix(rows, cols, 0.0);

    std::mutex failures_mutex;
    std::vector<PairFailure> failures;

    auto compute = [&](std::size_t i, std::size_t j) {
        try {
            const double d = document_distance(docs_a[i], docs_b[j], table, variant, idf);
            result.distances(i, j) = d;
            if (self) result.distances(j, i) = d;
        } catch (const Error& e) {
            {
                const std::lock_guard<std::mutex> lock(failures_mutex);
                failures.push_back({i, j, e.kind(), e.what()});
            }
            const double nan = std::numeric_limits<double>::quiet_NaN();
            result.distances(i, j) = nan;
            if (self) result.distances(j, i) = nan;
        }
    };

    if (self) {
        // Strict upper triangle, row-major flattening.
        const std::size_t total = rows * (rows - 1) / 2;
        parallel_chunks(total, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t t = begin; t < end; ++t) {
                // Invert t = i*(2*rows - i - 1)/2 + (j - i - 1).
                std::size_t i = 0;
                std::size_t skip = 0;
                while (skip + (rows - i - 1) <= t) {
                    skip += rows - i - 1;
                    ++i;
                }
                const std::size_t j = i + 1 + (t - skip);
                compute(i, j);
            }
        });
    } else {
        parallel_chunks(rows * cols, threads, [&](std::size_t begin, std::size_t end) {
            for (std::size_t t = begin; t < end; ++t) compute(t / cols, t % cols);
        });
    }

    std::sort(failures.begin(), failures.end(), [](const PairFailure& x, const PairFailure& y) {
        return x.row != y.row ? x.row < y.row : x.col < y.col;
    });
    if (!failures.empty() && policy == PairErrorPolicy::FailFast) {
        const auto& first = failures.front();
        throw Error(first.kind, "document pair (" + std::to_string(first.row) + ", " +
                                    std::to_string(first.col) + "): " + first.message);
    }
    result.failures = std::move(failures);
    return result;
}

} // namespace wmdx
