#include "sdmscr/embedding.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "sdmscr/decoupler.hpp"

namespace sdmscr {

namespace {

constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
constexpr std::uint64_t kIndexBasis = 0xcbf29ce484222325ULL;  // standard FNV-1a offset
constexpr std::uint64_t kSignBasis = 0x84222325cbf29ce4ULL;

std::uint64_t fnv1a(std::string_view s, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : s) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

// splitmix64 finalizer; decorrelates the sign stream from the index stream.
std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

bool is_token_byte(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> b, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
    return v;
}

}  // namespace

void ViewTriple::validate() const {
    require_same_shape(ori, rel, "ViewTriple");
    require_same_shape(ori, irr, "ViewTriple");
    if (!ori.all_finite() || !rel.all_finite() || !irr.all_finite()) {
        throw std::domain_error("ViewTriple holds a non-finite entry");
    }
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (is_token_byte(c)) {
            cur.push_back(static_cast<char>((c >= 'A' && c <= 'Z') ? c - 'A' + 'a' : c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

HashedToken hash_token(std::string_view token, std::size_t dim) {
    const std::uint64_t h_index = fnv1a(token, kIndexBasis);
    const std::uint64_t h_sign = mix64(fnv1a(token, kSignBasis));
    return {static_cast<std::size_t>(h_index % dim), (h_sign >> 63) ? -1.0 : 1.0};
}

std::vector<double> hash_embed(std::string_view text, std::size_t dim) {
    if (dim < 8) throw std::invalid_argument("hash_embed: dim must be >= 8");
    std::vector<double> v(dim, 0.0);
    for (const auto& tok : tokenize(text)) {
        const auto h = hash_token(tok, dim);
        v[h.index] += h.sign;
    }
    const double n = norm2(v);
    if (n > 0.0) {
        for (double& x : v) x /= n;
    }
    return v;
}

ViewTriple embed_views(std::span<const DecoupleRecord> records, std::size_t dim) {
    ViewTriple views{Matrix(records.size(), dim), Matrix(records.size(), dim),
                     Matrix(records.size(), dim)};
    auto put = [&](Matrix& m, std::size_t i, std::string_view text) {
        const auto v = hash_embed(text, dim);
        std::copy(v.begin(), v.end(), m.row(i).begin());
    };
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.node_id != i) {
            throw std::invalid_argument("embed_views: records must be node-ordered (record " +
                                        std::to_string(i) + " has node_id " +
                                        std::to_string(r.node_id) + ")");
        }
        put(views.ori, i, r.text_ori);
        put(views.rel, i, r.text_rel);
        if (r.status == DecoupleStatus::Ok) put(views.irr, i, r.text_irr);
    }
    return views;
}

std::vector<std::uint8_t> encode_emb1(const Matrix& m) {
    if (m.rows() > std::numeric_limits<std::uint32_t>::max() ||
        m.cols() > std::numeric_limits<std::uint32_t>::max()) {
        throw Emb1Error(Emb1Error::Kind::DimensionOverflow, "matrix too large for EMB1");
    }
    std::vector<std::uint8_t> out{'E', 'M', 'B', '1'};
    out.reserve(12 + 4 * m.size());
    put_u32(out, static_cast<std::uint32_t>(m.rows()));
    put_u32(out, static_cast<std::uint32_t>(m.cols()));
    for (double x : m.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    return out;
}

Matrix decode_emb1(std::span<const std::uint8_t> bytes) {
    using K = Emb1Error::Kind;
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "EMB1", 4) != 0) {
        throw Emb1Error(K::BadMagic, "not an EMB1 file (bad magic)");
    }
    if (bytes.size() < 12) throw Emb1Error(K::Truncated, "EMB1 header truncated");
    const std::uint64_t rows = get_u32(bytes, 4);
    const std::uint64_t cols = get_u32(bytes, 8);
    const std::uint64_t count = rows * cols;  // < 2^64 since both < 2^32
    if (count > (std::numeric_limits<std::size_t>::max() - 12) / 4) {
        throw Emb1Error(K::DimensionOverflow, "EMB1 dimensions overflow");
    }
    if (bytes.size() < 12 + 4 * count) {
        throw Emb1Error(K::Truncated, "EMB1 payload truncated: header says " + std::to_string(rows) +
                                          "x" + std::to_string(cols));
    }
    Matrix m(rows, cols);
    auto v = m.values();
    for (std::size_t i = 0; i < count; ++i) {
        v[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes, 12 + 4 * i)));
    }
    return m;
}

Matrix load_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Emb1Error(Emb1Error::Kind::Io, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_emb1(bytes);
}

void save_matrix(const Matrix& m, const std::filesystem::path& path) {
    const auto bytes = encode_emb1(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Emb1Error(Emb1Error::Kind::Io, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Emb1Error(Emb1Error::Kind::Io, "write failed for " + path.string());
}

}  // namespace sdmscr
