#ifndef WMDX_BENCH_HPP
#define WMDX_BENCH_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "wmdx/matrix.hpp"
#include "wmdx/measures.hpp"
#include "wmdx/similarity.hpp"

namespace wmdx {

/// A labeled document collection.
struct Corpus {
    std::string name;
    std::vector<Document> documents;
    std::vector<std::string> label_set; // sorted distinct labels
};

/// One `label<TAB>text` document per line; text is lowercased and split on
/// whitespace.
Corpus load_corpus(const std::filesystem::path& path, std::string name = "");

/// One token per line; blank lines ignored, tokens lowercased.
std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);

struct StopwordResult {
    Corpus corpus;
    std::size_t dropped_documents = 0; // emptied by the removal
};

StopwordResult remove_stopwords(const Corpus& corpus, const std::unordered_set<std::string>& stopwords);

/// Stratified subsample of `size` documents (largest-remainder quotas per
/// class, seeded selection). Returns the corpus unchanged when it is
/// already small enough.
Corpus stratified_sample(const Corpus& corpus, std::size_t size, std::uint64_t seed);

struct EvalConfig {
    int k_min = 1;
    int k_max = 20;
    int folds = 5;
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    Variant variant;
    bool global_k = false; // select one k over all folds instead of per fold
    PairErrorPolicy policy = PairErrorPolicy::FailFast;
    unsigned threads = 0;
};

struct FoldResult {
    int fold = 0;
    int chosen_k = 0;
    double error_percent = 0.0;
    std::size_t test_size = 0;
    std::size_t failed_pairs = 0; // only under SkipWithSentinel
};

struct EvalReport {
    std::string dataset;
    VariantKind variant = VariantKind::Wmd;
    GeometryKind geometry = GeometryKind::EuclideanSquared;
    std::vector<FoldResult> folds;
    double mean_error = 0.0;
    std::optional<double> std_error; // sample std dev; absent for a predefined split
    std::size_t dropped_empty_docs = 0;
    bool predefined_split = false;
};

/// Majority label among the k nearest training documents. Vote ties break
/// toward the smaller summed distance, then the lexicographically smaller
/// label; distance ties break toward the lower training index. NaN
/// distances rank last.
std::string knn_predict(std::span<const std::string> train_labels,
                        std::span<const double> query_distances, int k);

/// The k in [k_min, k_max] minimizing validation error, ties toward the
/// smallest k. val_to_train holds one row of distances per validation doc.
int select_k(const Matrix& val_to_train, std::span<const std::string> train_labels,
             std::span<const std::string> val_labels, int k_min, int k_max);

/// Explicit train/test document indices for corpora with a published split.
struct PredefinedSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Stratified k-fold cross-validation (or the predefined split): per fold,
/// a stratified seeded 80/20 train/validation sub-split selects k, document
/// frequencies come from the fold's training side only, and the fold error
/// is the percent of misclassified test documents.
EvalReport evaluate(const Corpus& corpus, const EmbeddingTable& table, const EvalConfig& config,
                    const std::optional<PredefinedSplit>& split = std::nullopt);

/// Paper-style table, one row per evaluation.
std::string format_report_table(const EvalReport& report);

/// Line-delimited JSON records, one per fold.
std::string format_report_records(const EvalReport& report);

} // namespace wmdx

#endif
