#include "wmdx/measures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "wmdx/error.hpp"

namespace wmdx {

namespace {

constexpr double kOpt2Floor = 1e-6; // keeps weights positive when norm >= d

/// Applies per-word factors and renormalizes. Factors must be positive.
WeightedBow reweight(const WeightedBow& bow, std::span<const double> factors) {
    WeightedBow out;
    out.indices = bow.indices;
    out.weights.resize(bow.weights.size());
    double total = 0.0;
    for (std::size_t k = 0; k < bow.weights.size(); ++k) {
        out.weights[k] = bow.weights[k] * factors[k];
        total += out.weights[k];
    }
    for (double& w : out.weights) w /= total;
    return out;
}

} // namespace

void resolve_bow(Document& doc, const EmbeddingTable& table) {
    if (doc.resolved) return;
    std::map<std::uint32_t, std::uint32_t> counts;
    doc.oov_tokens = 0;
    for (const auto& token : doc.tokens) {
        if (const auto idx = table.index_of(token)) {
            ++counts[*idx];
        } else {
            ++doc.oov_tokens;
        }
    }
    doc.bow.assign(counts.begin(), counts.end());
    doc.resolved = true;
}

double IdfTable::idf(std::uint32_t index) const {
    const auto it = df.find(index);
    const std::size_t n = it == df.end() ? 0 : it->second;
    return std::log(double(1 + doc_count) / double(1 + n)) + 1.0;
}

WeightedBow build_nbow(const Document& doc) {
    if (doc.bow.empty()) {
        throw Error(ErrorKind::EmptyDocument,
                    "document '" + doc.id + "' has no in-vocabulary tokens");
    }
    WeightedBow out;
    out.indices.reserve(doc.bow.size());
    out.weights.reserve(doc.bow.size());
    double total = 0.0;
    for (const auto& [index, count] : doc.bow) total += count;
    for (const auto& [index, count] : doc.bow) {
        out.indices.push_back(index);
        out.weights.push_back(double(count) / total);
    }
    return out;
}

IdfTable build_idf(std::span<const Document> corpus) {
    if (corpus.empty()) {
        throw Error(ErrorKind::EmptyCorpus, "idf statistics need a non-empty corpus");
    }
    IdfTable table;
    table.doc_count = corpus.size();
    for (const auto& doc : corpus) {
        for (const auto& [index, count] : doc.bow) ++table.df[index];
    }
    return table;
}

WeightedBow apply_tfidf(const WeightedBow& bow, const IdfTable& idf) {
    std::vector<double> factors(bow.size());
    for (std::size_t k = 0; k < bow.size(); ++k) factors[k] = idf.idf(bow.indices[k]);
    return reweight(bow, factors);
}

WeightedBow apply_wrd_weights(const WeightedBow& bow, const EmbeddingTable& table) {
    std::vector<double> factors(bow.size());
    for (std::size_t k = 0; k < bow.size(); ++k) {
        factors[k] = table.norm(bow.indices[k]);
        if (factors[k] <= 0.0) {
            throw Error(ErrorKind::ZeroNormWord,
                        "word '" + table.token(bow.indices[k]) + "' has zero norm");
        }
    }
    return reweight(bow, factors);
}

WeightedBow apply_opt2_weights(const WeightedBow& bow, const EmbeddingTable& table) {
    const double d = double(table.dimension());
    std::vector<double> factors(bow.size());
    for (std::size_t k = 0; k < bow.size(); ++k) {
        const double norm = table.norm(bow.indices[k]);
        if (norm <= 0.0) {
            throw Error(ErrorKind::ZeroNormWord,
                        "word '" + table.token(bow.indices[k]) + "' has zero norm");
        }
        factors[k] = std::max(std::log(d / norm), kOpt2Floor);
    }
    return reweight(bow, factors);
}

double opt1_coefficient(const WeightedBow& a, const WeightedBow& b, const EmbeddingTable& table) {
    // Merge over the ascending index lists; term order is identical for
    // (a, b) and (b, a), so the sum is exactly symmetric.
    double coefficient = 1.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a.indices[i] < b.indices[j]) {
            ++i;
        } else if (a.indices[i] > b.indices[j]) {
            ++j;
        } else {
            const double norm = table.norm(a.indices[i]);
            if (norm <= 0.0) {
                throw Error(ErrorKind::ZeroNormWord,
                            "shared word '" + table.token(a.indices[i]) + "' has zero norm");
            }
            coefficient += std::min(a.weights[i], b.weights[j]) / (norm * norm);
            ++i;
            ++j;
        }
    }
    return coefficient;
}

} // namespace wmdx
