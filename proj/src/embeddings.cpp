#include "wmdx/embeddings.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "wmdx/error.hpp"

namespace wmdx {

namespace {

bool parse_positive_integer(const std::string& field, std::size_t& out) {
    if (field.empty()) return false;
    std::size_t value = 0;
    for (char c : field) {
        if (c < '0' || c > '9') return false;
        value = value * 10 + std::size_t(c - '0');
        if (value > 1'000'000'000'000ULL) return false;
    }
    out = value;
    return value > 0;
}

bool parse_double(const std::string& field, double& out) {
    if (field.empty()) return false;
    char* end = nullptr;
    out = std::strtod(field.c_str(), &end);
    return end == field.c_str() + field.size() && std::isfinite(out);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream in(line);
    std::string field;
    while (in >> field) fields.push_back(std::move(field));
    return fields;
}

} // namespace

EmbeddingTable::EmbeddingTable(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) {
        throw Error(ErrorKind::InvalidArgument, "embedding dimension must be positive");
    }
}

bool EmbeddingTable::add(std::string token, std::span<const double> values) {
    if (values.size() != dimension_) {
        throw Error(ErrorKind::InconsistentDimension,
                    "vector for '" + token + "' has " + std::to_string(values.size()) +
                        " values, expected " + std::to_string(dimension_));
    }
    const auto [it, inserted] =
        vocab_.try_emplace(std::move(token), static_cast<std::uint32_t>(tokens_.size()));
    if (!inserted) {
        ++duplicates_;
        return false;
    }
    tokens_.push_back(it->first);
    vectors_.insert(vectors_.end(), values.begin(), values.end());
    double sq = 0.0;
    for (double v : values) sq += v * v;
    norms_.push_back(std::sqrt(sq));
    return true;
}

std::optional<std::uint32_t> EmbeddingTable::index_of(std::string_view token) const {
    // Heterogeneous lookup needs a transparent hash; a temporary string is
    // fine at this table's scale.
    const auto it = vocab_.find(std::string(token));
    if (it == vocab_.end()) return std::nullopt;
    return it->second;
}

std::optional<EmbeddingTable::Hit> EmbeddingTable::lookup(std::string_view token) const {
    const auto idx = index_of(token);
    if (!idx) return std::nullopt;
    return Hit{vector(*idx), norm(*idx), *idx};
}

EmbeddingTable load_text_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open embedding file " + path.string());
    }

    std::string line;
    std::size_t line_number = 0;
    std::size_t dimension = 0;
    std::optional<EmbeddingTable> table;
    std::vector<double> values;

    while (std::getline(in, line)) {
        ++line_number;
        const auto fields = split_fields(line);
        if (fields.empty()) continue;

        if (!table) {
            // An optional `|V| d` header: exactly two positive integers.
            std::size_t vocab_size = 0, header_dim = 0;
            if (fields.size() == 2 && parse_positive_integer(fields[0], vocab_size) &&
                parse_positive_integer(fields[1], header_dim)) {
                dimension = header_dim;
                table.emplace(dimension);
                continue;
            }
            if (fields.size() < 2) {
                throw Error(ErrorKind::MalformedLine,
                            "line " + std::to_string(line_number) + ": expected token and values");
            }
            dimension = fields.size() - 1;
            table.emplace(dimension);
        }

        if (fields.size() != dimension + 1) {
            throw Error(ErrorKind::InconsistentDimension,
                        "line " + std::to_string(line_number) + ": has " +
                            std::to_string(fields.size() - 1) + " values, expected " +
                            std::to_string(dimension));
        }
        values.clear();
        for (std::size_t k = 1; k < fields.size(); ++k) {
            double v = 0.0;
            if (!parse_double(fields[k], v)) {
                throw Error(ErrorKind::MalformedLine, "line " + std::to_string(line_number) +
                                                          ": '" + fields[k] + "' is not a number");
            }
            values.push_back(v);
        }
        table->add(fields[0], values);
    }

    if (!table || table->size() == 0) {
        throw Error(ErrorKind::EmptyFile, "no embeddings in " + path.string());
    }
    return std::move(*table);
}

void write_text_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write " + path.string());
    }
    out << table.size() << ' ' << table.dimension() << '\n';
    char buffer[40];
    for (std::uint32_t i = 0; i < table.size(); ++i) {
        out << table.token(i);
        for (double v : table.vector(i)) {
            std::snprintf(buffer, sizeof buffer, " %.17g", v);
            out << buffer;
        }
        out << '\n';
    }
}

EmbeddingTable load_binary_word2vec(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open embedding file " + path.string());
    }

    std::string header;
    if (!std::getline(in, header)) {
        throw Error(ErrorKind::HeaderParseError, "missing `|V| d` header line");
    }
    const auto fields = split_fields(header);
    std::size_t vocab_size = 0, dimension = 0;
    if (fields.size() != 2 || !parse_positive_integer(fields[0], vocab_size) ||
        !parse_positive_integer(fields[1], dimension)) {
        throw Error(ErrorKind::HeaderParseError, "header line is not `|V| d`");
    }

    EmbeddingTable table(dimension);
    std::vector<float> raw(dimension);
    std::vector<double> values(dimension);
    std::string token;
    for (std::size_t w = 0; w < vocab_size; ++w) {
        token.clear();
        int c;
        // Record separators ('\n' after the previous vector) precede the token.
        while ((c = in.get()) != EOF && (c == '\n' || c == ' ')) {
        }
        while (c != EOF && c != ' ') {
            token.push_back(static_cast<char>(c));
            if (token.size() > 1u << 20) {
                throw Error(ErrorKind::TruncatedFile, "unterminated token in " + path.string());
            }
            c = in.get();
        }
        if (c == EOF) {
            throw Error(ErrorKind::TruncatedFile,
                        "file ends inside word " + std::to_string(w + 1) + " of " +
                            std::to_string(vocab_size));
        }
        if (!in.read(reinterpret_cast<char*>(raw.data()),
                     static_cast<std::streamsize>(dimension * sizeof(float)))) {
            throw Error(ErrorKind::TruncatedFile,
                        "file ends inside the vector of '" + token + "'");
        }
        for (std::size_t k = 0; k < dimension; ++k) values[k] = static_cast<double>(raw[k]);
        table.add(token, values);
    }
    return table;
}

void write_binary_word2vec(const EmbeddingTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::IoError, "cannot write " + path.string());
    }
    out << table.size() << ' ' << table.dimension() << '\n';
    std::vector<float> raw(table.dimension());
    for (std::uint32_t i = 0; i < table.size(); ++i) {
        out << table.token(i) << ' ';
        const auto values = table.vector(i);
        for (std::size_t k = 0; k < raw.size(); ++k) raw[k] = static_cast<float>(values[k]);
        out.write(reinterpret_cast<const char*>(raw.data()),
                  static_cast<std::streamsize>(raw.size() * sizeof(float)));
        out << '\n';
    }
}

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::optional<EmbeddingFormat> format) {
    const EmbeddingFormat effective = format.value_or(
        path.extension() == ".bin" ? EmbeddingFormat::Binary : EmbeddingFormat::Text);
    return effective == EmbeddingFormat::Binary ? load_binary_word2vec(path)
                                                : load_text_embeddings(path);
}

} // namespace wmdx
