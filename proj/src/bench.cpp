#include "wmdx/bench.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "wmdx/error.hpp"
#include "wmdx/rng.hpp"

namespace wmdx {

namespace {

std::string lowercased(std::string_view text) {
    std::string out(text);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string> whitespace_tokens(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream in(text);
    std::string token;
    while (in >> token) tokens.push_back(std::move(token));
    return tokens;
}

std::vector<std::string> sorted_labels(const std::vector<Document>& documents) {
    std::vector<std::string> labels;
    for (const auto& doc : documents) labels.push_back(doc.label);
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    return labels;
}

/// Documents grouped by label (labels in sorted order), indices ascending.
std::vector<std::vector<std::size_t>> group_by_label(const std::vector<Document>& docs,
                                                     const std::vector<std::size_t>& subset,
                                                     const std::vector<std::string>& label_set) {
    std::vector<std::vector<std::size_t>> groups(label_set.size());
    for (std::size_t idx : subset) {
        const auto it = std::lower_bound(label_set.begin(), label_set.end(), docs[idx].label);
        groups[static_cast<std::size_t>(it - label_set.begin())].push_back(idx);
    }
    return groups;
}

std::vector<Document> gather(const std::vector<Document>& docs,
                             const std::vector<std::size_t>& indices) {
    std::vector<Document> out;
    out.reserve(indices.size());
    for (std::size_t idx : indices) out.push_back(docs[idx]);
    return out;
}

std::vector<std::string> gather_labels(const std::vector<Document>& docs,
                                       const std::vector<std::size_t>& indices) {
    std::vector<std::string> out;
    out.reserve(indices.size());
    for (std::size_t idx : indices) out.push_back(docs[idx].label);
    return out;
}

double rank_key(double distance) {
    return std::isnan(distance) ? std::numeric_limits<double>::infinity() : distance;
}

/// Misclassified count on one distance block for a fixed k.
std::size_t misclassified(const Matrix& queries_to_train,
                          std::span<const std::string> train_labels,
                          std::span<const std::string> query_labels, int k) {
    std::size_t wrong = 0;
    std::vector<double> row(queries_to_train.cols());
    for (std::size_t q = 0; q < queries_to_train.rows(); ++q) {
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = queries_to_train(q, j);
        if (knn_predict(train_labels, row, k) != query_labels[q]) ++wrong;
    }
    return wrong;
}

} // namespace

Corpus load_corpus(const std::filesystem::path& path, std::string name) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open corpus file " + path.string());
    }
    Corpus corpus;
    corpus.name = name.empty() ? path.stem().string() : std::move(name);

    std::string line;
    std::size_t line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0) {
            throw Error(ErrorKind::MalformedLine,
                        "line " + std::to_string(line_number) + ": expected `label<TAB>text`");
        }
        Document doc;
        doc.id = std::to_string(line_number);
        doc.label = line.substr(0, tab);
        doc.tokens = whitespace_tokens(lowercased(std::string_view(line).substr(tab + 1)));
        corpus.documents.push_back(std::move(doc));
    }
    if (corpus.documents.empty()) {
        throw Error(ErrorKind::EmptyCorpus, "no documents in " + path.string());
    }
    corpus.label_set = sorted_labels(corpus.documents);
    return corpus;
}

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open stopword file " + path.string());
    }
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        for (auto& token : whitespace_tokens(lowercased(line))) words.insert(std::move(token));
    }
    return words;
}

StopwordResult remove_stopwords(const Corpus& corpus,
                                const std::unordered_set<std::string>& stopwords) {
    StopwordResult result;
    result.corpus.name = corpus.name;
    for (const auto& doc : corpus.documents) {
        Document filtered;
        filtered.id = doc.id;
        filtered.label = doc.label;
        for (const auto& token : doc.tokens) {
            if (!stopwords.contains(token)) filtered.tokens.push_back(token);
        }
        if (filtered.tokens.empty() && !doc.tokens.empty()) {
            ++result.dropped_documents;
            continue;
        }
        result.corpus.documents.push_back(std::move(filtered));
    }
    result.corpus.label_set = sorted_labels(result.corpus.documents);
    return result;
}

Corpus stratified_sample(const Corpus& corpus, std::size_t size, std::uint64_t seed) {
    const std::size_t total = corpus.documents.size();
    if (size == 0) {
        throw Error(ErrorKind::InvalidArgument, "sample size must be positive");
    }
    if (size >= total) return corpus;

    std::vector<std::size_t> all(total);
    std::iota(all.begin(), all.end(), std::size_t{0});
    auto groups = group_by_label(corpus.documents, all, corpus.label_set);

    // Largest-remainder quotas keep the class shares exact in integers.
    std::vector<std::size_t> quota(groups.size());
    std::vector<std::pair<std::size_t, std::size_t>> remainder; // (remainder, class)
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < groups.size(); ++c) {
        quota[c] = size * groups[c].size() / total;
        assigned += quota[c];
        remainder.emplace_back(size * groups[c].size() % total, c);
    }
    std::sort(remainder.begin(), remainder.end(), [](const auto& x, const auto& y) {
        return x.first != y.first ? x.first > y.first : x.second < y.second;
    });
    for (std::size_t k = 0; assigned < size; ++k, ++assigned) ++quota[remainder[k].second];

    std::vector<std::size_t> picked;
    for (std::size_t c = 0; c < groups.size(); ++c) {
        std::mt19937_64 rng(derive_seed(seed, c));
        shuffle(groups[c], rng);
        picked.insert(picked.end(), groups[c].begin(), groups[c].begin() + quota[c]);
    }
    std::sort(picked.begin(), picked.end());

    Corpus out;
    out.name = corpus.name;
    out.documents = gather(corpus.documents, picked);
    out.label_set = sorted_labels(out.documents);
    return out;
}

std::string knn_predict(std::span<const std::string> train_labels,
                        std::span<const double> query_distances, int k) {
    if (k < 1) {
        throw Error(ErrorKind::InvalidArgument, "k must be at least 1");
    }
    if (train_labels.size() != query_distances.size()) {
        throw Error(ErrorKind::DimensionMismatch, "one distance per training document required");
    }
    if (static_cast<std::size_t>(k) > train_labels.size()) {
        throw Error(ErrorKind::KTooLarge, "k = " + std::to_string(k) + " exceeds " +
                                              std::to_string(train_labels.size()) +
                                              " training documents");
    }

    std::vector<std::size_t> order(train_labels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        const double dx = rank_key(query_distances[x]);
        const double dy = rank_key(query_distances[y]);
        return dx != dy ? dx < dy : x < y;
    });

    struct Tally {
        int votes = 0;
        double total_distance = 0.0;
    };
    std::map<std::string, Tally> tallies; // label order resolves final ties
    for (int r = 0; r < k; ++r) {
        auto& tally = tallies[train_labels[order[static_cast<std::size_t>(r)]]];
        ++tally.votes;
        tally.total_distance += rank_key(query_distances[order[static_cast<std::size_t>(r)]]);
    }

    const std::string* winner = nullptr;
    const Tally* best = nullptr;
    for (const auto& [label, tally] : tallies) {
        if (!best || tally.votes > best->votes ||
            (tally.votes == best->votes && tally.total_distance < best->total_distance)) {
            winner = &label;
            best = &tally;
        }
    }
    return *winner;
}

int select_k(const Matrix& val_to_train, std::span<const std::string> train_labels,
             std::span<const std::string> val_labels, int k_min, int k_max) {
    int best_k = k_min;
    std::size_t best_wrong = std::numeric_limits<std::size_t>::max();
    for (int k = k_min; k <= k_max; ++k) {
        const std::size_t wrong = misclassified(val_to_train, train_labels, val_labels, k);
        if (wrong < best_wrong) {
            best_wrong = wrong;
            best_k = k;
        }
    }
    return best_k;
}

EvalReport evaluate(const Corpus& corpus, const EmbeddingTable& table, const EvalConfig& config,
                    const std::optional<PredefinedSplit>& split) {
    if (config.k_min < 1 || config.k_min > config.k_max) {
        throw Error(ErrorKind::InvalidArgument, "need 1 <= k_min <= k_max");
    }
    if (!split && config.folds < 2) {
        throw Error(ErrorKind::InvalidArgument, "cross-validation needs at least 2 folds");
    }
    if (!(config.val_fraction > 0.0) || !(config.val_fraction < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "validation fraction must be in (0, 1)");
    }

    EvalReport report;
    report.dataset = corpus.name;
    report.variant = config.variant.kind;
    report.geometry = config.variant.geometry.kind;
    report.predefined_split = split.has_value();

    // Resolve once; documents left empty by vocabulary filtering cannot be
    // classified and are dropped up front (reported in the count).
    std::vector<Document> docs = corpus.documents;
    std::vector<char> alive(docs.size(), 0);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        resolve_bow(docs[i], table);
        alive[i] = !docs[i].bow.empty();
        if (!alive[i]) ++report.dropped_empty_docs;
    }

    const std::vector<std::string>& label_set = corpus.label_set;
    if (label_set.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "classification needs at least 2 labels");
    }

    // Train/test index lists per fold.
    std::vector<std::vector<std::size_t>> fold_test;
    std::vector<std::size_t> predefined_train;
    if (split) {
        PredefinedSplit filtered;
        for (std::size_t idx : split->train) {
            if (idx >= docs.size()) {
                throw Error(ErrorKind::InvalidArgument, "split index out of range");
            }
            if (alive[idx]) filtered.train.push_back(idx);
        }
        for (std::size_t idx : split->test) {
            if (idx >= docs.size()) {
                throw Error(ErrorKind::InvalidArgument, "split index out of range");
            }
            if (alive[idx]) filtered.test.push_back(idx);
        }
        std::sort(filtered.train.begin(), filtered.train.end());
        std::sort(filtered.test.begin(), filtered.test.end());
        fold_test.push_back(filtered.test);
        predefined_train = filtered.train;
    } else {
        std::vector<std::size_t> kept;
        for (std::size_t i = 0; i < docs.size(); ++i) {
            if (alive[i]) kept.push_back(i);
        }
        auto groups = group_by_label(docs, kept, label_set);
        std::mt19937_64 rng(config.seed);
        fold_test.assign(static_cast<std::size_t>(config.folds), {});
        for (std::size_t c = 0; c < groups.size(); ++c) {
            if (groups[c].size() < static_cast<std::size_t>(config.folds)) {
                throw Error(ErrorKind::InsufficientClassSize,
                            "class '" + label_set[c] + "' has " +
                                std::to_string(groups[c].size()) + " documents, fewer than " +
                                std::to_string(config.folds) + " folds");
            }
            shuffle(groups[c], rng);
            for (std::size_t k = 0; k < groups[c].size(); ++k) {
                fold_test[k % static_cast<std::size_t>(config.folds)].push_back(groups[c][k]);
            }
        }
        for (auto& fold : fold_test) std::sort(fold.begin(), fold.end());
    }

    struct FoldState {
        std::vector<std::size_t> train, subtrain, val;
        std::vector<std::size_t> val_wrong_by_k; // validation misclassifications per k
        Matrix test_matrix;
        std::vector<std::string> train_labels, test_labels;
        std::size_t failed_pairs = 0;
        int k_cap = 0;
    };
    std::vector<FoldState> states(fold_test.size());

    int shared_k_cap = std::numeric_limits<int>::max();
    for (std::size_t f = 0; f < fold_test.size(); ++f) {
        FoldState& state = states[f];

        if (split) {
            state.train = predefined_train;
        } else {
            const auto& test = fold_test[f];
            for (std::size_t i = 0; i < docs.size(); ++i) {
                if (alive[i] && !std::binary_search(test.begin(), test.end(), i)) {
                    state.train.push_back(i);
                }
            }
        }

        // Stratified, seeded train/validation sub-split.
        auto groups = group_by_label(docs, state.train, label_set);
        std::mt19937_64 sub_rng(derive_seed(config.seed, 1000 + f));
        for (auto& group : groups) {
            shuffle(group, sub_rng);
            const std::size_t n = group.size();
            std::size_t take = static_cast<std::size_t>(
                std::floor(config.val_fraction * static_cast<double>(n) + 0.5));
            take = n >= 2 ? std::clamp<std::size_t>(take, 1, n - 1) : 0;
            state.val.insert(state.val.end(), group.begin(), group.begin() + take);
            state.subtrain.insert(state.subtrain.end(), group.begin() + take, group.end());
        }
        std::sort(state.val.begin(), state.val.end());
        std::sort(state.subtrain.begin(), state.subtrain.end());

        // Document frequencies from this fold's training documents only.
        IdfTable idf;
        idf.doc_count = state.train.size();
        for (std::size_t idx : state.train) {
            for (const auto& [word, count] : docs[idx].bow) ++idf.df[word];
        }
        const IdfTable* idf_ptr = config.variant.kind == VariantKind::WmdTfidf ? &idf : nullptr;

        const auto subtrain_docs = gather(docs, state.subtrain);
        const auto val_docs = gather(docs, state.val);
        const auto subtrain_labels = gather_labels(docs, state.subtrain);
        const auto val_labels = gather_labels(docs, state.val);

        auto val_result = distance_matrix(val_docs, subtrain_docs, table, config.variant, idf_ptr,
                                          config.policy, config.threads);
        state.failed_pairs += val_result.failures.size();

        state.k_cap = std::min<int>(config.k_max, static_cast<int>(state.subtrain.size()));
        state.k_cap = std::max(state.k_cap, 1);
        shared_k_cap = std::min(shared_k_cap, state.k_cap);
        const int k_lo = std::min(config.k_min, state.k_cap);
        state.val_wrong_by_k.assign(static_cast<std::size_t>(state.k_cap) + 1, 0);
        for (int k = k_lo; k <= state.k_cap; ++k) {
            state.val_wrong_by_k[static_cast<std::size_t>(k)] =
                misclassified(val_result.distances, subtrain_labels, val_labels, k);
        }

        const auto train_docs = gather(docs, state.train);
        const auto test_docs = gather(docs, fold_test[f]);
        state.train_labels = gather_labels(docs, state.train);
        state.test_labels = gather_labels(docs, fold_test[f]);
        auto test_result = distance_matrix(test_docs, train_docs, table, config.variant, idf_ptr,
                                           config.policy, config.threads);
        state.failed_pairs += test_result.failures.size();
        state.test_matrix = std::move(test_result.distances);
    }

    // k selection: per fold, or once over the summed validation errors.
    std::vector<int> chosen(states.size(), config.k_min);
    if (config.global_k) {
        const int k_lo = std::min(config.k_min, shared_k_cap);
        int best_k = k_lo;
        std::size_t best_wrong = std::numeric_limits<std::size_t>::max();
        for (int k = k_lo; k <= shared_k_cap; ++k) {
            std::size_t wrong = 0;
            for (const auto& state : states) wrong += state.val_wrong_by_k[std::size_t(k)];
            if (wrong < best_wrong) {
                best_wrong = wrong;
                best_k = k;
            }
        }
        std::fill(chosen.begin(), chosen.end(), best_k);
    } else {
        for (std::size_t f = 0; f < states.size(); ++f) {
            const int k_lo = std::min(config.k_min, states[f].k_cap);
            int best_k = k_lo;
            std::size_t best_wrong = std::numeric_limits<std::size_t>::max();
            for (int k = k_lo; k <= states[f].k_cap; ++k) {
                const std::size_t wrong = states[f].val_wrong_by_k[std::size_t(k)];
                if (wrong < best_wrong) {
                    best_wrong = wrong;
                    best_k = k;
                }
            }
            chosen[f] = best_k;
        }
    }

    for (std::size_t f = 0; f < states.size(); ++f) {
        const FoldState& state = states[f];
        const int k = std::min<int>(chosen[f], static_cast<int>(state.train_labels.size()));
        const std::size_t wrong =
            misclassified(state.test_matrix, state.train_labels, state.test_labels, k);
        FoldResult fold;
        fold.fold = static_cast<int>(f);
        fold.chosen_k = k;
        fold.test_size = state.test_labels.size();
        fold.error_percent =
            state.test_labels.empty()
                ? 0.0
                : 100.0 * static_cast<double>(wrong) / static_cast<double>(state.test_labels.size());
        fold.failed_pairs = state.failed_pairs;
        report.folds.push_back(fold);
    }

    double mean = 0.0;
    for (const auto& fold : report.folds) mean += fold.error_percent;
    mean /= static_cast<double>(report.folds.size());
    report.mean_error = mean;
    if (report.folds.size() > 1 && !report.predefined_split) {
        double ss = 0.0;
        for (const auto& fold : report.folds) {
            ss += (fold.error_percent - mean) * (fold.error_percent - mean);
        }
        report.std_error = std::sqrt(ss / static_cast<double>(report.folds.size() - 1));
    }
    return report;
}

std::string format_report_table(const EvalReport& report) {
    char buffer[64];
    std::string ks;
    for (std::size_t f = 0; f < report.folds.size(); ++f) {
        if (f > 0) ks += ',';
        ks += std::to_string(report.folds[f].chosen_k);
    }
    std::string error;
    std::snprintf(buffer, sizeof buffer, "%.1f", report.mean_error);
    error = buffer;
    if (report.std_error) {
        std::snprintf(buffer, sizeof buffer, " +/- %.1f", *report.std_error);
        error += buffer;
    }

    std::ostringstream out;
    out << "dataset: " << report.dataset << '\n'
        << "variant: " << variant_kind_name(report.variant) << '\n'
        << "geometry: " << geometry_kind_name(report.geometry) << '\n'
        << "folds: " << report.folds.size() << '\n'
        << "chosen k: " << ks << '\n';
    if (report.dropped_empty_docs > 0) {
        out << "dropped empty documents: " << report.dropped_empty_docs << '\n';
    }
    out << "error: " << error << '\n';
    return out.str();
}

std::string format_report_records(const EvalReport& report) {
    std::string out;
    for (const auto& fold : report.folds) {
        nlohmann::ordered_json record;
        record["dataset"] = report.dataset;
        record["variant"] = variant_kind_name(report.variant);
        record["geometry"] = geometry_kind_name(report.geometry);
        record["fold"] = fold.fold;
        record["chosen_k"] = fold.chosen_k;
        record["error_percent"] = fold.error_percent;
        if (fold.failed_pairs > 0) record["failed_pairs"] = fold.failed_pairs;
        out += record.dump();
        out += '\n';
    }
    return out;
}

} // namespace wmdx
