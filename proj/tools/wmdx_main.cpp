#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wmdx/bench.hpp"
#include "wmdx/embeddings.hpp"
#include "wmdx/error.hpp"
#include "wmdx/geometry.hpp"
#include "wmdx/measures.hpp"
#include "wmdx/similarity.hpp"

namespace {

using namespace wmdx;

struct CommonOptions {
    std::string embeddings;
    std::string format = "auto";
    std::string variant = "wmd";
    std::string geometry = "euclidean";
    int euclidean_power = 2;
    std::string fisher_matrix;
    bool fisher_identity = false;
    bool opt1_raw_counts = false;
    std::string idf_corpus;
    std::string policy = "fail-fast";
    unsigned threads = 0;
};

void add_common_flags(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--embeddings", opts.embeddings, "word vector file")->required();
    cmd->add_option("--format", opts.format, "embedding file format")
        ->check(CLI::IsMember({"auto", "text", "bin"}));
    cmd->add_option("--variant", opts.variant, "distance variant")
        ->check(CLI::IsMember({"wmd", "wmd-tfidf", "wrd", "opt1", "opt2"}));
    cmd->add_option("--geometry", opts.geometry, "word cost geometry")
        ->check(CLI::IsMember({"euclidean", "poincare", "cosine", "fisher"}));
    cmd->add_option("--euclidean-power", opts.euclidean_power, "1 = distance, 2 = squared")
        ->check(CLI::IsMember({1, 2}));
    cmd->add_option("--fisher-matrix", opts.fisher_matrix, "metric tensor file");
    cmd->add_flag("--fisher-identity", opts.fisher_identity,
                  "use the identity metric for fisher geometry");
    cmd->add_flag("--opt1-raw-counts", opts.opt1_raw_counts,
                  "opt1 coefficient over raw counts instead of nbow weights");
    cmd->add_option("--idf-corpus", opts.idf_corpus, "corpus for document frequencies");
    cmd->add_option("--policy", opts.policy, "per-pair error policy")
        ->check(CLI::IsMember({"fail-fast", "skip"}));
    cmd->add_option("--threads", opts.threads, "worker cap (0 = hardware)");
}

EmbeddingTable load_table(const CommonOptions& opts) {
    std::optional<EmbeddingFormat> format;
    if (opts.format == "text") format = EmbeddingFormat::Text;
    if (opts.format == "bin") format = EmbeddingFormat::Binary;
    return load_embeddings(opts.embeddings, format);
}

VariantKind parse_variant(const std::string& name) {
    if (name == "wmd") return VariantKind::Wmd;
    if (name == "wmd-tfidf") return VariantKind::WmdTfidf;
    if (name == "wrd") return VariantKind::Wrd;
    if (name == "opt1") return VariantKind::Opt1;
    return VariantKind::Opt2;
}

Variant build_variant(const CommonOptions& opts, std::size_t dimension) {
    Geometry geometry;
    if (opts.geometry == "poincare") geometry.kind = GeometryKind::PoincareBall;
    if (opts.geometry == "cosine") geometry.kind = GeometryKind::Cosine;
    if (opts.geometry == "fisher") geometry.kind = GeometryKind::FisherCosine;
    geometry.euclidean_power = opts.euclidean_power;

    const VariantKind kind = parse_variant(opts.variant);
    if (kind == VariantKind::Wrd && opts.geometry != "euclidean" && opts.geometry != "cosine") {
        throw Error(ErrorKind::InvalidArgument, "wrd is defined over cosine costs");
    }
    if (geometry.kind == GeometryKind::FisherCosine) {
        if (!opts.fisher_matrix.empty()) {
            geometry.fisher = std::make_shared<FisherMatrix>(load_fisher_matrix(opts.fisher_matrix));
        } else if (opts.fisher_identity) {
            geometry.fisher = std::make_shared<FisherMatrix>(FisherMatrix::identity(dimension));
        } else {
            throw Error(ErrorKind::InvalidArgument,
                        "fisher geometry needs --fisher-matrix or --fisher-identity");
        }
    }

    Variant variant = Variant::make(kind, geometry);
    variant.opt1_raw_counts = opts.opt1_raw_counts;
    return variant;
}

PairErrorPolicy parse_policy(const std::string& name) {
    return name == "skip" ? PairErrorPolicy::SkipWithSentinel : PairErrorPolicy::FailFast;
}

std::optional<IdfTable> load_idf(const CommonOptions& opts, const EmbeddingTable& table,
                                 std::vector<Document>* fallback_corpus = nullptr) {
    if (!opts.idf_corpus.empty()) {
        auto corpus = load_corpus(opts.idf_corpus);
        for (auto& doc : corpus.documents) resolve_bow(doc, table);
        return build_idf(corpus.documents);
    }
    if (fallback_corpus) return build_idf(*fallback_corpus);
    return std::nullopt;
}

Document read_document(const std::string& source, bool inline_text, const std::string& id) {
    std::string text;
    if (inline_text) {
        text = source;
    } else {
        std::ifstream in(source);
        if (!in) {
            throw Error(ErrorKind::IoError, "cannot open document file " + source);
        }
        std::ostringstream buffer;
        buffer << in.rdbuf();
        text = buffer.str();
    }
    for (char& c : text) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    Document doc;
    doc.id = id;
    std::istringstream in(text);
    std::string token;
    while (in >> token) doc.tokens.push_back(std::move(token));
    return doc;
}

struct DistOptions {
    CommonOptions common;
    std::string doc_a, doc_b;
    bool inline_text = false;
};

int run_dist(const DistOptions& opts) {
    const auto table = load_table(opts.common);
    const auto variant = build_variant(opts.common, table.dimension());
    const auto idf = load_idf(opts.common, table);
    if (variant.kind == VariantKind::WmdTfidf && !idf) {
        throw Error(ErrorKind::MissingIdf, "wmd-tfidf needs --idf-corpus");
    }

    Document a = read_document(opts.doc_a, opts.inline_text, "a");
    Document b = read_document(opts.doc_b, opts.inline_text, "b");
    resolve_bow(a, table);
    resolve_bow(b, table);

    const double distance =
        document_distance(a, b, table, variant, idf ? &*idf : nullptr);
    std::printf("%.6f\n", distance);
    return 0;
}

struct MatrixOptions {
    CommonOptions common;
    std::string corpus;
    std::string output = "-";
};

int run_matrix(const MatrixOptions& opts) {
    const auto table = load_table(opts.common);
    const auto variant = build_variant(opts.common, table.dimension());

    auto corpus = load_corpus(opts.corpus);
    for (auto& doc : corpus.documents) resolve_bow(doc, table);
    const auto idf = load_idf(opts.common, table,
                              variant.kind == VariantKind::WmdTfidf ? &corpus.documents : nullptr);

    const auto result =
        distance_matrix(corpus.documents, corpus.documents, table, variant,
                        idf ? &*idf : nullptr, parse_policy(opts.common.policy),
                        opts.common.threads);

    std::ostringstream out;
    char buffer[40];
    for (std::size_t i = 0; i < result.distances.rows(); ++i) {
        for (std::size_t j = 0; j < result.distances.cols(); ++j) {
            std::snprintf(buffer, sizeof buffer, "%.6f", result.distances(i, j));
            if (j > 0) out << ' ';
            out << buffer;
        }
        out << '\n';
    }
    if (opts.output == "-") {
        std::cout << out.str();
    } else {
        std::ofstream file(opts.output);
        if (!file) {
            throw Error(ErrorKind::IoError, "cannot write " + opts.output);
        }
        file << out.str();
    }
    return result.failures.empty() ? 0 : 1;
}

struct BenchOptions {
    CommonOptions common;
    std::string corpus;
    std::string test_corpus;
    std::string dataset;
    std::string stopwords;
    std::string records = "-";
    std::size_t sample = 0;
    int folds = 5;
    int k_min = 1;
    int k_max = 20;
    double val_fraction = 0.2;
    std::uint64_t seed = 0;
    bool global_k = false;
};

int run_bench(const BenchOptions& opts) {
    const auto table = load_table(opts.common);
    const auto variant = build_variant(opts.common, table.dimension());

    Corpus corpus = load_corpus(opts.corpus, opts.dataset);
    std::optional<Corpus> test_corpus;
    if (!opts.test_corpus.empty()) {
        test_corpus = load_corpus(opts.test_corpus);
    }

    if (!opts.stopwords.empty()) {
        const auto words = load_stopwords(opts.stopwords);
        std::size_t dropped = 0;
        auto filtered = remove_stopwords(corpus, words);
        dropped += filtered.dropped_documents;
        corpus = std::move(filtered.corpus);
        if (test_corpus) {
            auto filtered_test = remove_stopwords(*test_corpus, words);
            dropped += filtered_test.dropped_documents;
            test_corpus = std::move(filtered_test.corpus);
        }
        if (dropped > 0) {
            std::cerr << "note: dropped " << dropped
                      << " documents emptied by stopword removal\n";
        }
    }
    if (opts.sample > 0 && !test_corpus) {
        corpus = stratified_sample(corpus, opts.sample, opts.seed);
    }

    std::optional<PredefinedSplit> split;
    if (test_corpus) {
        PredefinedSplit s;
        for (std::size_t i = 0; i < corpus.documents.size(); ++i) s.train.push_back(i);
        for (const auto& doc : test_corpus->documents) {
            s.test.push_back(corpus.documents.size());
            corpus.documents.push_back(doc);
        }
        corpus.label_set.clear();
        for (const auto& doc : corpus.documents) corpus.label_set.push_back(doc.label);
        std::sort(corpus.label_set.begin(), corpus.label_set.end());
        corpus.label_set.erase(std::unique(corpus.label_set.begin(), corpus.label_set.end()),
                               corpus.label_set.end());
        split = std::move(s);
    }

    EvalConfig config;
    config.k_min = opts.k_min;
    config.k_max = opts.k_max;
    config.folds = opts.folds;
    config.val_fraction = opts.val_fraction;
    config.seed = opts.seed;
    config.variant = variant;
    config.global_k = opts.global_k;
    config.policy = parse_policy(opts.common.policy);
    config.threads = opts.common.threads;

    const auto report = evaluate(corpus, table, config, split);

    std::cout << format_report_table(report);
    const auto records = format_report_records(report);
    if (opts.records == "-") {
        std::cout << '\n' << records;
    } else {
        std::ofstream file(opts.records);
        if (!file) {
            throw Error(ErrorKind::IoError, "cannot write " + opts.records);
        }
        file << records;
    }

    for (const auto& fold : report.folds) {
        if (fold.failed_pairs > 0) return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"word mover's distance variants over pluggable word-vector geometries"};
    app.require_subcommand(1);

    DistOptions dist;
    auto* dist_cmd = app.add_subcommand("dist", "distance between two documents");
    add_common_flags(dist_cmd, dist.common);
    dist_cmd->add_option("doc_a", dist.doc_a, "first document file (or text with --inline)")
        ->required();
    dist_cmd->add_option("doc_b", dist.doc_b, "second document file (or text with --inline)")
        ->required();
    dist_cmd->add_flag("--inline", dist.inline_text, "arguments are document text, not paths");

    MatrixOptions matrix;
    auto* matrix_cmd = app.add_subcommand("matrix", "self distance matrix of a corpus");
    add_common_flags(matrix_cmd, matrix.common);
    matrix_cmd->add_option("--corpus", matrix.corpus, "corpus file")->required();
    matrix_cmd->add_option("--output,-o", matrix.output, "output file (- = stdout)");

    BenchOptions bench;
    auto* bench_cmd = app.add_subcommand("bench", "knn classification benchmark");
    add_common_flags(bench_cmd, bench.common);
    bench_cmd->add_option("--corpus", bench.corpus, "corpus file (training set with --test-corpus)")
        ->required();
    bench_cmd->add_option("--test-corpus", bench.test_corpus, "predefined test split");
    bench_cmd->add_option("--dataset", bench.dataset, "dataset name for reports");
    bench_cmd->add_option("--stopwords", bench.stopwords, "stopword file to remove");
    bench_cmd->add_option("--records", bench.records, "structured records output (- = stdout)");
    bench_cmd->add_option("--sample", bench.sample, "stratified subsample size");
    bench_cmd->add_option("--folds", bench.folds, "cross-validation folds");
    bench_cmd->add_option("--k-min", bench.k_min, "smallest neighborhood size");
    bench_cmd->add_option("--k-max", bench.k_max, "largest neighborhood size");
    bench_cmd->add_option("--val-fraction", bench.val_fraction, "validation share of the train split");
    bench_cmd->add_option("--seed", bench.seed, "random seed");
    bench_cmd->add_flag("--global-k", bench.global_k, "select one k over all folds");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (dist_cmd->parsed()) return run_dist(dist);
        if (matrix_cmd->parsed()) return run_matrix(matrix);
        return run_bench(bench);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
