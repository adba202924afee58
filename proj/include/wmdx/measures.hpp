#ifndef WMDX_MEASURES_HPP
#define WMDX_MEASURES_HPP

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "wmdx/embeddings.hpp"

namespace wmdx {

/// A tokenized document. The bag of words is derived once against an
/// embedding table; out-of-vocabulary tokens are dropped and counted.
struct Document {
    std::string id;
    std::string label; // empty = unlabeled
    std::vector<std::string> tokens;

    /// (vocabulary index, count), sorted by index; filled by resolve_bow.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> bow;
    std::size_t oov_tokens = 0;
    bool resolved = false;
};

/// Builds doc.bow from doc.tokens. Idempotent per table; resolving against
/// a different table requires a fresh Document.
void resolve_bow(Document& doc, const EmbeddingTable& table);

/// Word weights over vocabulary indices. Indices are unique and ascending;
/// weights are positive and sum to one.
struct WeightedBow {
    std::vector<std::uint32_t> indices;
    std::vector<double> weights;

    std::size_t size() const noexcept { return indices.size(); }
};

/// Document-frequency statistics for TF-IDF.
struct IdfTable {
    std::size_t doc_count = 0;
    std::unordered_map<std::uint32_t, std::size_t> df;

    /// Smoothed inverse document frequency ln((1+N)/(1+df)) + 1; unseen
    /// words fall back to df = 0.
    double idf(std::uint32_t index) const;
};

/// Normalized bag of words: count / total count.
WeightedBow build_nbow(const Document& doc);

/// Document frequencies over a corpus of resolved documents.
IdfTable build_idf(std::span<const Document> corpus);

/// Reweights by idf factors and renormalizes.
WeightedBow apply_tfidf(const WeightedBow& bow, const IdfTable& idf);

/// Reweights by embedding norms and renormalizes.
WeightedBow apply_wrd_weights(const WeightedBow& bow, const EmbeddingTable& table);

/// Reweights by max(ln(d / norm), 1e-6) and renormalizes.
WeightedBow apply_opt2_weights(const WeightedBow& bow, const EmbeddingTable& table);

/// 1 + sum over shared words of min(weight_a, weight_b) / norm^2. Exactly
/// symmetric in its two arguments; 1 when the documents share no words.
double opt1_coefficient(const WeightedBow& a, const WeightedBow& b, const EmbeddingTable& table);

} // namespace wmdx

#endif
