#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

#include "mmhcl/common.hpp"
#include "mmhcl/dense.hpp"
#include "mmhcl/model.hpp"
#include "mmhcl/operators.hpp"
#include "mmhcl/sparse.hpp"

namespace mmhcl {

// All binary artifacts are little-endian with fixed-width fields, written
// byte by byte through the helpers below, so files are identical across
// hosts. No timestamps or other ambient state are ever serialized.

namespace bin {

inline void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline void write_f64(std::ostream& os, double v) { write_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline void write_f32(std::ostream& os, float v) { write_u32(os, std::bit_cast<std::uint32_t>(v)); }

inline std::uint32_t read_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw IoError("read_u32: unexpected end of file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline std::uint64_t read_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw IoError("read_u64: unexpected end of file");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

inline double read_f64(std::istream& is) { return std::bit_cast<double>(read_u64(is)); }

inline float read_f32(std::istream& is) { return std::bit_cast<float>(read_u32(is)); }

inline void write_magic(std::ostream& os, const char magic[4]) { os.write(magic, 4); }

inline void expect_magic(std::istream& is, const char magic[4], const char* what) {
    char b[4];
    is.read(b, 4);
    if (!is || std::memcmp(b, magic, 4) != 0)
        throw FormatError(std::string(what) + ": bad magic");
}

inline void write_string(std::ostream& os, const std::string& s, bool long_prefix) {
    if (long_prefix)
        write_u64(os, s.size());
    else
        write_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is, bool long_prefix) {
    const std::uint64_t len = long_prefix ? read_u64(is) : read_u32(is);
    std::string s(len, '\0');
    is.read(s.data(), static_cast<std::streamsize>(len));
    if (!is) throw IoError("read_string: unexpected end of file");
    return s;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream os(p, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + p.string());
    return os;
}

inline std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + p.string());
    return is;
}

}  // namespace bin

inline constexpr char kCheckpointMagic[4] = {'M', 'M', 'H', 'C'};
inline constexpr char kFeatureMagic[4] = {'M', 'M', 'H', 'F'};
inline constexpr char kHypergraphMagic[4] = {'M', 'M', 'H', 'G'};
inline constexpr char kAdjacencyMagic[4] = {'M', 'M', 'H', 'A'};
inline constexpr std::uint32_t kFormatVersion = 1;

// rows u64, cols u64, nnz u64, row_ptr, col_idx, values.
inline void write_sparse(std::ostream& os, const SparseCsr& m) {
    bin::write_u64(os, m.rows);
    bin::write_u64(os, m.cols);
    bin::write_u64(os, m.nnz());
    for (std::size_t v : m.row_ptr) bin::write_u64(os, v);
    for (std::size_t v : m.col_idx) bin::write_u64(os, v);
    for (double v : m.values) bin::write_f64(os, v);
}

inline SparseCsr read_sparse(std::istream& is) {
    SparseCsr m;
    m.rows = bin::read_u64(is);
    m.cols = bin::read_u64(is);
    const std::uint64_t nnz = bin::read_u64(is);
    m.row_ptr.resize(m.rows + 1);
    m.col_idx.resize(nnz);
    m.values.resize(nnz);
    for (auto& v : m.row_ptr) v = bin::read_u64(is);
    for (auto& v : m.col_idx) v = bin::read_u64(is);
    for (auto& v : m.values) v = bin::read_f64(is);
    m.validate();
    return m;
}

// Hypergraph operator file: magic, version, hgnn flag, incidence. The
// normalization is recomputed on load, which is bit-stable because it is a
// pure function of the incidence.
inline void save_propagation_operator(const std::filesystem::path& p, const PropagationOperator& op) {
    auto os = bin::open_out(p);
    bin::write_magic(os, kHypergraphMagic);
    bin::write_u32(os, kFormatVersion);
    bin::write_u32(os, op.hgnn_style() ? 1 : 0);
    write_sparse(os, op.incidence());
    if (!os) throw IoError("save_propagation_operator: write failed: " + p.string());
}

inline PropagationOperator load_propagation_operator(const std::filesystem::path& p) {
    auto is = bin::open_in(p);
    bin::expect_magic(is, kHypergraphMagic, "hypergraph operator file");
    const std::uint32_t version = bin::read_u32(is);
    if (version != kFormatVersion)
        throw FormatError("hypergraph operator file: unsupported version " + std::to_string(version));
    const bool hgnn = bin::read_u32(is) != 0;
    return make_operator(read_sparse(is), hgnn);
}

inline void save_adjacency_operator(const std::filesystem::path& p, const AdjacencyOperator& op) {
    auto os = bin::open_out(p);
    bin::write_magic(os, kAdjacencyMagic);
    bin::write_u32(os, kFormatVersion);
    write_sparse(os, op.adjacency());
    if (!os) throw IoError("save_adjacency_operator: write failed: " + p.string());
}

inline AdjacencyOperator load_adjacency_operator(const std::filesystem::path& p) {
    auto is = bin::open_in(p);
    bin::expect_magic(is, kAdjacencyMagic, "adjacency operator file");
    const std::uint32_t version = bin::read_u32(is);
    if (version != kFormatVersion)
        throw FormatError("adjacency operator file: unsupported version " + std::to_string(version));
    return AdjacencyOperator(read_sparse(is));
}

namespace detail {

inline void write_table(std::ostream& os, const std::string& name, const DenseMatrix& t) {
    bin::write_string(os, name, /*long_prefix=*/false);
    bin::write_u64(os, t.rows());
    bin::write_u64(os, t.cols());
    for (double v : t.data()) bin::write_f64(os, v);
}

inline DenseMatrix read_table(std::istream& is, const std::string& expect_name) {
    const std::string name = bin::read_string(is, /*long_prefix=*/false);
    if (name != expect_name)
        throw FormatError("checkpoint: expected table '" + expect_name + "', found '" + name + "'");
    const std::uint64_t rows = bin::read_u64(is);
    const std::uint64_t cols = bin::read_u64(is);
    DenseMatrix t(rows, cols);
    for (double& v : t.data()) v = bin::read_f64(is);
    return t;
}

}  // namespace detail

struct Checkpoint {
    ModelParams params;
    std::string config_json;
};

// Checkpoint file: magic, version, table count, then each named table
// (u32 name length + bytes, rows u64, cols u64, row-major f64), then the
// u64-length-prefixed model config JSON.
inline void save_checkpoint(const std::filesystem::path& p, const ModelParams& params,
                            const std::string& config_json) {
    auto os = bin::open_out(p);
    bin::write_magic(os, kCheckpointMagic);
    bin::write_u32(os, kFormatVersion);
    bin::write_u32(os, 4);
    detail::write_table(os, "user_emb", params.user_emb);
    detail::write_table(os, "item_emb", params.item_emb);
    detail::write_table(os, "user_hyper", params.user_hyper);
    detail::write_table(os, "item_hyper", params.item_hyper);
    bin::write_string(os, config_json, /*long_prefix=*/true);
    if (!os) throw IoError("save_checkpoint: write failed: " + p.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& p) {
    auto is = bin::open_in(p);
    bin::expect_magic(is, kCheckpointMagic, "checkpoint file");
    const std::uint32_t version = bin::read_u32(is);
    if (version != kFormatVersion)
        throw FormatError("checkpoint file: unsupported version " + std::to_string(version));
    const std::uint32_t tables = bin::read_u32(is);
    if (tables != 4) throw FormatError("checkpoint file: expected 4 tables");
    Checkpoint c;
    c.params.user_emb = detail::read_table(is, "user_emb");
    c.params.item_emb = detail::read_table(is, "item_emb");
    c.params.user_hyper = detail::read_table(is, "user_hyper");
    c.params.item_hyper = detail::read_table(is, "item_hyper");
    c.config_json = bin::read_string(is, /*long_prefix=*/true);
    if (c.params.user_hyper.rows() != c.params.num_users() ||
        c.params.item_hyper.rows() != c.params.num_items() ||
        c.params.item_emb.cols() != c.params.dim() ||
        c.params.user_hyper.cols() != c.params.dim() ||
        c.params.item_hyper.cols() != c.params.dim())
        throw FormatError("checkpoint file: inconsistent table shapes");
    return c;
}

// Feature matrix file: magic, version, rows u64, cols u64, row-major f32
// payload. Values are widened to f64 on load.
inline void write_feature_matrix(const std::filesystem::path& p, const DenseMatrix& f) {
    auto os = bin::open_out(p);
    bin::write_magic(os, kFeatureMagic);
    bin::write_u32(os, kFormatVersion);
    bin::write_u64(os, f.rows());
    bin::write_u64(os, f.cols());
    for (double v : f.data()) bin::write_f32(os, static_cast<float>(v));
    if (!os) throw IoError("write_feature_matrix: write failed: " + p.string());
}

inline DenseMatrix read_feature_matrix_stream(std::istream& is, const std::string& what) {
    bin::expect_magic(is, kFeatureMagic, what.c_str());
    const std::uint32_t version = bin::read_u32(is);
    if (version != kFormatVersion)
        throw FormatError(what + ": unsupported version " + std::to_string(version));
    const std::uint64_t rows = bin::read_u64(is);
    const std::uint64_t cols = bin::read_u64(is);
    DenseMatrix f(rows, cols);
    for (double& v : f.data()) v = static_cast<double>(bin::read_f32(is));
    return f;
}

// FNV-1a over a file's bytes; manifests use this to pin artifact content.
inline std::uint64_t fnv1a_bytes(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string read_file_bytes(const std::filesystem::path& p) {
    auto is = bin::open_in(p);
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return bytes;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i) {
        s[i] = digits[v & 0xf];
        v >>= 4;
    }
    return s;
}

}  // namespace mmhcl
