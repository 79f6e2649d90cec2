#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mmhcl/common.hpp"
#include "mmhcl/dense.hpp"
#include "mmhcl/graphs.hpp"
#include "mmhcl/rng.hpp"
#include "mmhcl/serialize.hpp"
#include "mmhcl/sparse.hpp"

namespace mmhcl {

// Interaction data after id compaction. Raw string ids map to dense indices
// in first-appearance order; exact duplicate pairs are dropped and counted.
struct InteractionLog {
    std::size_t num_users = 0;
    std::size_t num_items = 0;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    std::vector<std::string> user_ids;
    std::vector<std::string> item_ids;
    std::size_t duplicates_dropped = 0;
};

// Parses a TSV of `user<TAB>item` per line. Fields beyond the second are
// ignored; blank lines are skipped; a line without two nonempty fields is a
// format error reported with its line number.
inline InteractionLog load_interactions(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open interaction file: " + path.string());
    InteractionLog log;
    std::map<std::string, std::size_t> user_index;
    std::map<std::string, std::size_t> item_index;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t tab1 = line.find('\t');
        if (tab1 == std::string::npos)
            throw FormatError(path.string() + ":" + std::to_string(line_no) +
                              ": expected user<TAB>item");
        std::size_t tab2 = line.find('\t', tab1 + 1);
        if (tab2 == std::string::npos) tab2 = line.size();
        const std::string user = line.substr(0, tab1);
        const std::string item = line.substr(tab1 + 1, tab2 - tab1 - 1);
        if (user.empty() || item.empty())
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": empty field");
        const auto [uit, unew] = user_index.emplace(user, log.user_ids.size());
        if (unew) log.user_ids.push_back(user);
        const auto [iit, inew] = item_index.emplace(item, log.item_ids.size());
        if (inew) log.item_ids.push_back(item);
        const std::pair<std::size_t, std::size_t> pair{uit->second, iit->second};
        if (seen.insert(pair).second)
            log.pairs.push_back(pair);
        else
            ++log.duplicates_dropped;
    }
    if (log.pairs.empty()) throw DataError("interaction file has no interactions: " + path.string());
    log.num_users = log.user_ids.size();
    log.num_items = log.item_ids.size();
    return log;
}

enum class SplitMode { global, per_user };

inline const char* to_string(SplitMode m) { return m == SplitMode::global ? "global" : "per_user"; }

inline SplitMode split_mode_from_string(const std::string& s) {
    if (s == "global") return SplitMode::global;
    if (s == "per_user") return SplitMode::per_user;
    throw ConfigError("unknown split_mode: " + s);
}

struct DataSplit {
    std::vector<std::pair<std::size_t, std::size_t>> train;
    std::vector<std::pair<std::size_t, std::size_t>> val;
    std::vector<std::pair<std::size_t, std::size_t>> test;
    std::uint64_t seed = 0;
    SplitMode mode = SplitMode::global;
};

// 8:1:1 split with floor-sized val and test shares; the remainder stays in
// train. global shuffles the whole pair list once; per_user applies the
// same rule within each user's interactions (users are processed in
// ascending index order, so the draw sequence is fixed).
inline DataSplit make_split(const InteractionLog& log, std::uint64_t seed,
                            SplitMode mode = SplitMode::global) {
    DataSplit out;
    out.seed = seed;
    out.mode = mode;
    Rng rng(seed);
    auto split_group = [&](std::vector<std::pair<std::size_t, std::size_t>> group) {
        shuffle(group, rng);
        const std::size_t n = group.size();
        const std::size_t n_val = n / 10;
        const std::size_t n_test = n / 10;
        const std::size_t n_train = n - n_val - n_test;
        out.train.insert(out.train.end(), group.begin(), group.begin() + n_train);
        out.val.insert(out.val.end(), group.begin() + n_train, group.begin() + n_train + n_val);
        out.test.insert(out.test.end(), group.begin() + n_train + n_val, group.end());
    };
    if (mode == SplitMode::global) {
        split_group(log.pairs);
    } else {
        std::vector<std::vector<std::pair<std::size_t, std::size_t>>> by_user(log.num_users);
        for (const auto& p : log.pairs) by_user[p.first].push_back(p);
        for (auto& group : by_user)
            if (!group.empty()) split_group(std::move(group));
    }
    return out;
}

// Binary interaction matrix from unique (user, item) pairs.
inline SparseCsr interactions_to_csr(std::size_t users, std::size_t items,
                                     const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    std::vector<CooEntry> entries;
    entries.reserve(pairs.size());
    for (const auto& [u, i] : pairs) entries.push_back({u, i, 1.0});
    return from_coo(users, items, std::move(entries));
}

// Per-user sorted item lists, the shape the evaluator consumes.
inline std::vector<std::vector<std::size_t>> interactions_to_lists(
    std::size_t users, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    std::vector<std::vector<std::size_t>> lists(users);
    for (const auto& [u, i] : pairs) {
        if (u >= users) throw ParamError("interactions_to_lists: user index out of range");
        lists[u].push_back(i);
    }
    for (auto& l : lists) std::sort(l.begin(), l.end());
    return lists;
}

// Loads item features: the binary format when the magic matches, otherwise
// CSV with one row per item.
inline DenseMatrix load_feature_matrix(const std::filesystem::path& path) {
    auto is = bin::open_in(path);
    char magic[4] = {0, 0, 0, 0};
    is.read(magic, 4);
    const bool is_binary = is.gcount() == 4 && std::memcmp(magic, kFeatureMagic, 4) == 0;
    is.clear();
    is.seekg(0);
    if (is_binary) return read_feature_matrix_stream(is, "feature file " + path.string());

    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t row_cols = 0;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            if (comma == std::string::npos) comma = line.size();
            const std::string cell = line.substr(pos, comma - pos);
            try {
                std::size_t used = 0;
                values.push_back(std::stod(cell, &used));
                while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used])))
                    ++used;
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw FormatError(path.string() + ":" + std::to_string(line_no) +
                                  ": not a number: '" + cell + "'");
            }
            ++row_cols;
            pos = comma + 1;
        }
        if (rows == 0)
            cols = row_cols;
        else if (row_cols != cols)
            throw FormatError(path.string() + ":" + std::to_string(line_no) + ": ragged row");
        ++rows;
    }
    if (rows == 0) throw DataError("feature file is empty: " + path.string());
    DenseMatrix f(rows, cols);
    std::copy(values.begin(), values.end(), f.data().begin());
    return f;
}

struct SyntheticData {
    InteractionLog log;
    ModalityBundle features;
};

// Block-structured synthetic dataset: users and items are divided into
// `blocks` equal groups; each user interacts with 30% of its block's items
// (at least one) plus Bernoulli cross-block noise scaled so that noise=r
// makes roughly r cross-block interactions per in-block interaction. Item
// features are the one-hot block centroid plus N(0, 0.1^2) jitter, drawn
// for two modalities (visual, textual).
inline SyntheticData generate_synthetic(std::size_t users, std::size_t items, std::size_t blocks,
                                        double noise, std::uint64_t seed) {
    if (blocks == 0) throw ParamError("generate_synthetic: blocks must be positive");
    if (users % blocks != 0 || items % blocks != 0)
        throw ParamError("generate_synthetic: blocks must divide users and items");
    if (noise < 0.0 || noise > 1.0) throw ParamError("generate_synthetic: noise must be in [0, 1]");
    const std::size_t upb = users / blocks;
    const std::size_t ipb = items / blocks;
    const std::size_t n_in = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(0.3 * static_cast<double>(ipb))));

    Rng rng(seed);
    SyntheticData out;
    out.log.num_users = users;
    out.log.num_items = items;
    for (std::size_t u = 0; u < users; ++u) {
        const std::size_t b = u / upb;
        const std::size_t lo = b * ipb;
        std::vector<std::size_t> picked = sample_without_replacement(rng, ipb, n_in);
        for (std::size_t& i : picked) i += lo;
        if (noise > 0.0 && items > ipb) {
            const double q = noise * static_cast<double>(n_in) / static_cast<double>(items - ipb);
            for (std::size_t i = 0; i < items; ++i) {
                if (i >= lo && i < lo + ipb) continue;
                if (uniform01(rng) < q) picked.push_back(i);
            }
        }
        std::sort(picked.begin(), picked.end());
        for (std::size_t i : picked) out.log.pairs.emplace_back(u, i);
    }
    out.log.user_ids.resize(users);
    for (std::size_t u = 0; u < users; ++u) out.log.user_ids[u] = "u" + std::to_string(u);
    out.log.item_ids.resize(items);
    for (std::size_t i = 0; i < items; ++i) out.log.item_ids[i] = "i" + std::to_string(i);

    for (ModalityTag tag : {ModalityTag::visual, ModalityTag::textual}) {
        DenseMatrix f(items, blocks);
        for (std::size_t i = 0; i < items; ++i) {
            const std::size_t bi = i / ipb;
            for (std::size_t c = 0; c < blocks; ++c)
                f(i, c) = (c == bi ? 1.0 : 0.0) + 0.1 * normal01(rng);
        }
        out.features.modalities.push_back({tag, std::move(f)});
    }
    return out;
}

}  // namespace mmhcl
