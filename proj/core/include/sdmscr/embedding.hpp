#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sdmscr/matrix.hpp"

namespace sdmscr {

struct DecoupleRecord;

/// Per-node view embeddings: row i of each matrix belongs to node i.
struct ViewTriple {
    Matrix ori;
    Matrix rel;
    Matrix irr;

    std::size_t num_nodes() const { return ori.rows(); }
    std::size_t dim() const { return ori.cols(); }

    /// Throws ShapeError unless all three share a shape, and
    /// std::domain_error on a non-finite entry.
    void validate() const;
};

/// Lowercased word tokens; anything that is not an ASCII letter/digit or a
/// UTF-8 continuation byte separates tokens.
std::vector<std::string> tokenize(std::string_view text);

/// Signed feature hashing of the bag of words, L2-normalized (or all zero
/// when the text has no tokens).
std::vector<double> hash_embed(std::string_view text, std::size_t dim);

/// Index/sign pair a token hashes to.
struct HashedToken {
    std::size_t index;
    double sign;
};
HashedToken hash_token(std::string_view token, std::size_t dim);

ViewTriple embed_views(std::span<const DecoupleRecord> records, std::size_t dim);

// EMB1 matrix files: "EMB1", rows u32 LE, cols u32 LE, rows*cols f32 LE, row-major.

class Emb1Error : public std::runtime_error {
public:
    enum class Kind { BadMagic, Truncated, DimensionOverflow, Io };
    Emb1Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

std::vector<std::uint8_t> encode_emb1(const Matrix& m);
Matrix decode_emb1(std::span<const std::uint8_t> bytes);

Matrix load_matrix(const std::filesystem::path& path);
void save_matrix(const Matrix& m, const std::filesystem::path& path);

}  // namespace sdmscr
