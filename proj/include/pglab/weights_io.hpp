#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "pglab/model.hpp"
#include "pglab/vocab.hpp"

// Model checkpoints: a little-endian binary container. Layout, version 1:
//
//   bytes 0..7   magic "PGLABWTS"
//   u32          format version (1)
//   u8           coverage flag
//   u8           two-layer vocab head flag
//   u16          reserved (0)
//   u64 x4       vocab size, embedding dim, hidden dim, attention dim
//   u64          token count, then per token: u64 byte length + UTF-8 bytes
//   u64          tensor count, then per tensor:
//                  u64 name length + bytes, u64 rows (0 for vectors),
//                  u64 cols, u64 element count, elements as f64
//   u32          CRC-32 (IEEE) of every preceding byte
//
// Every tensor the model owns appears exactly once, under the same names
// reported by ModelParams::tensor_refs().

namespace pglab {

inline constexpr char kWeightsMagic[8] = {'P', 'G', 'L', 'A', 'B', 'W', 'T', 'S'};
inline constexpr std::uint32_t kWeightsVersion = 1;

namespace detail {

inline std::uint32_t crc32_ieee(const unsigned char* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

struct ByteWriter {
    std::vector<unsigned char> bytes;

    void u8(std::uint8_t v) { bytes.push_back(v); }
    void u16(std::uint16_t v) {
        for (int i = 0; i < 2; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void str(const std::string& s) {
        u64(s.size());
        bytes.insert(bytes.end(), s.begin(), s.end());
    }
};

struct ByteReader {
    const unsigned char* p = nullptr;
    std::size_t len = 0;
    std::size_t pos = 0;
    std::string origin;

    void need(std::size_t n) const {
        if (pos + n > len) throw FormatError(origin + ": truncated weights file");
    }
    std::uint8_t u8() {
        need(1);
        return p[pos++];
    }
    std::uint16_t u16() {
        need(2);
        std::uint16_t v = 0;
        for (int i = 0; i < 2; ++i) v |= static_cast<std::uint16_t>(p[pos++]) << (8 * i);
        return v;
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[pos++]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[pos++]) << (8 * i);
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        std::uint64_t n = u64();
        need(n);
        std::string s(reinterpret_cast<const char*>(p + pos), n);
        pos += n;
        return s;
    }
};

}  // namespace detail

inline void save_weights(const std::string& path, ModelParams& params, const Vocabulary& vocab) {
    params.validate();
    if (vocab.size() != params.dims.vocab_size)
        throw DimensionError("save_weights: vocabulary size disagrees with model dims");

    detail::ByteWriter w;
    w.bytes.insert(w.bytes.end(), kWeightsMagic, kWeightsMagic + 8);
    w.u32(kWeightsVersion);
    w.u8(params.coverage ? 1 : 0);
    w.u8(params.two_layer_vocab ? 1 : 0);
    w.u16(0);
    w.u64(params.dims.vocab_size);
    w.u64(params.dims.emb_dim);
    w.u64(params.dims.hidden_dim);
    w.u64(params.dims.attn_dim);

    w.u64(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) w.str(vocab.token(static_cast<int>(i)));

    auto refs = params.tensor_refs();
    w.u64(refs.size());
    for (const auto& t : refs) {
        w.str(t.name);
        w.u64(t.rows);
        w.u64(t.cols);
        w.u64(t.len);
        for (std::size_t i = 0; i < t.len; ++i) w.f64(t.data[i]);
    }
    w.u32(detail::crc32_ieee(w.bytes.data(), w.bytes.size()));

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(w.bytes.data()), static_cast<std::streamsize>(w.bytes.size()));
    if (!out) throw IoError("write failed: " + path);
}

struct LoadedModel {
    ModelParams params;
    Vocabulary vocab;
};

inline LoadedModel load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (bytes.size() < 8 + 4 + 4) throw FormatError(path + ": too short for a weights file");
    if (std::memcmp(bytes.data(), kWeightsMagic, 8) != 0) throw FormatError(path + ": bad magic");

    const std::size_t body_len = bytes.size() - 4;
    detail::ByteReader tail{bytes.data(), bytes.size(), body_len, path};
    const std::uint32_t stored_crc = tail.u32();
    const std::uint32_t actual_crc = detail::crc32_ieee(bytes.data(), body_len);
    if (stored_crc != actual_crc) throw FormatError(path + ": checksum mismatch, file corrupt");

    detail::ByteReader r{bytes.data(), body_len, 8, path};
    const std::uint32_t version = r.u32();
    if (version != kWeightsVersion)
        throw FormatError(path + ": unsupported weights version " + std::to_string(version));
    const bool coverage = r.u8() != 0;
    const bool two_layer = r.u8() != 0;
    r.u16();  // reserved

    ModelDims dims;
    dims.vocab_size = r.u64();
    dims.emb_dim = r.u64();
    dims.hidden_dim = r.u64();
    dims.attn_dim = r.u64();

    const std::uint64_t token_count = r.u64();
    if (token_count != dims.vocab_size) throw FormatError(path + ": vocab table size disagrees with dims");
    std::vector<std::string> tokens;
    tokens.reserve(token_count);
    for (std::uint64_t i = 0; i < token_count; ++i) tokens.push_back(r.str());
    const char* reserved[] = {kUnkToken, kStartToken, kStopToken, kPadToken};
    if (tokens.size() < 4) throw FormatError(path + ": vocab table too small for reserved slots");
    for (std::size_t i = 0; i < 4; ++i)
        if (tokens[i] != reserved[i])
            throw FormatError(path + ": reserved vocabulary slot " + std::to_string(i) + " holds '" +
                              tokens[i] + "'");

    LoadedModel out;
    out.vocab = Vocabulary::from_tokens({tokens.begin() + 4, tokens.end()});
    if (out.vocab.size() != dims.vocab_size) throw FormatError(path + ": duplicate tokens in vocab table");
    out.params = make_model_shell(dims, coverage, two_layer);

    struct Stored {
        std::size_t rows, cols, offset, len;
    };
    std::unordered_map<std::string, Stored> table;
    const std::uint64_t tensor_count = r.u64();
    for (std::uint64_t i = 0; i < tensor_count; ++i) {
        std::string name = r.str();
        Stored s;
        s.rows = r.u64();
        s.cols = r.u64();
        s.len = r.u64();
        r.need(s.len * 8);
        s.offset = r.pos;
        r.pos += s.len * 8;
        if (!table.emplace(name, s).second)
            throw FormatError(path + ": duplicate tensor '" + name + "'");
    }
    if (r.pos != body_len) throw FormatError(path + ": trailing bytes after tensor table");

    auto refs = out.params.tensor_refs();
    if (refs.size() != table.size())
        throw FormatError(path + ": tensor count " + std::to_string(table.size()) + ", model needs " +
                          std::to_string(refs.size()));
    for (auto& t : refs) {
        auto it = table.find(t.name);
        if (it == table.end()) throw FormatError(path + ": missing tensor '" + t.name + "'");
        const Stored& s = it->second;
        if (s.rows != t.rows || s.cols != t.cols || s.len != t.len)
            throw FormatError(path + ": tensor '" + t.name + "' has shape " + std::to_string(s.rows) + "x" +
                              std::to_string(s.cols) + " (" + std::to_string(s.len) + " values), expected " +
                              std::to_string(t.rows) + "x" + std::to_string(t.cols) + " (" +
                              std::to_string(t.len) + ")");
        detail::ByteReader dr{bytes.data(), body_len, s.offset, path};
        for (std::size_t i = 0; i < t.len; ++i) t.data[i] = dr.f64();
    }
    out.params.validate();
    return out;
}

}  // namespace pglab
