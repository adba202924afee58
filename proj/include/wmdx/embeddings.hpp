#ifndef WMDX_EMBEDDINGS_HPP
#define WMDX_EMBEDDINGS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wmdx {

/// Immutable-after-load word vector table with cached L2 norms. Duplicate
/// tokens in a source file keep the first occurrence; later ones are only
/// counted. All values are held in double precision regardless of the
/// on-disk width.
class EmbeddingTable {
public:
    explicit EmbeddingTable(std::size_t dimension);

    std::size_t dimension() const noexcept { return dimension_; }
    std::size_t size() const noexcept { return tokens_.size(); }

    /// False when the token was already present (the row is not replaced).
    bool add(std::string token, std::span<const double> values);

    std::optional<std::uint32_t> index_of(std::string_view token) const;

    std::span<const double> vector(std::uint32_t index) const {
        return {vectors_.data() + std::size_t(index) * dimension_, dimension_};
    }
    double norm(std::uint32_t index) const { return norms_[index]; }
    const std::string& token(std::uint32_t index) const { return tokens_[index]; }

    struct Hit {
        std::span<const double> vector;
        double norm;
        std::uint32_t index;
    };
    std::optional<Hit> lookup(std::string_view token) const;

    std::size_t duplicates_ignored() const noexcept { return duplicates_; }

private:
    std::size_t dimension_;
    std::unordered_map<std::string, std::uint32_t> vocab_;
    std::vector<std::string> tokens_;
    std::vector<double> vectors_;
    std::vector<double> norms_;
    std::size_t duplicates_ = 0;
};

enum class EmbeddingFormat { Text, Binary };

/// Text format: one `token v1 ... vd` line per word, optionally preceded by
/// a `|V| d` header line.
EmbeddingTable load_text_embeddings(const std::filesystem::path& path);
void write_text_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);

/// word2vec binary format: ASCII `|V| d` header line, then per word the
/// token bytes up to a space followed by d little-endian 32-bit floats and
/// a trailing newline.
EmbeddingTable load_binary_word2vec(const std::filesystem::path& path);
void write_binary_word2vec(const EmbeddingTable& table, const std::filesystem::path& path);

/// Dispatches on the explicit format, or on the file extension (.bin =
/// binary) when none is given.
EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               std::optional<EmbeddingFormat> format = std::nullopt);

} // namespace wmdx

#endif
