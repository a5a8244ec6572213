#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "pglab/csv.hpp"
#include "pglab/decode.hpp"
#include "pglab/kn_lm.hpp"
#include "pglab/ols.hpp"
#include "pglab/parse_tree.hpp"

namespace pglab {

// Which predictor columns the probe matrix carries. Entropy and structure
// features are computed here; the LSTM and parser entropies come from an
// external sidecar, never computed in-repo.
struct FeatureSelection {
    bool entropies = true;        // h_gen, h_copy, h_ngram
    bool external_lstm = false;   // h_lstm from the sidecar
    bool external_parser = false; // h_parser from the sidecar
    bool structure = true;        // d_root, d_edge
    bool pos = true;              // POS indicator block, one reference level dropped
};

// Per-token external entropies keyed by (doc_id, step), both already
// normalized to [0,1] by whoever produced them.
struct ExternalEntropies {
    struct Entry {
        double h_lstm = 0.0;
        double h_parser = 0.0;
    };
    std::unordered_map<std::string, Entry> rows;

    static std::string key(const std::string& doc_id, std::size_t step) {
        return doc_id + '\x1f' + std::to_string(step);
    }
    const Entry* find(const std::string& doc_id, std::size_t step) const {
        auto it = rows.find(key(doc_id, step));
        return it == rows.end() ? nullptr : &it->second;
    }
};

// Sidecar format: CSV with header doc_id,step,h_lstm,h_parser.
inline ExternalEntropies read_entropy_sidecar(std::istream& in, const std::string& origin = "<sidecar>") {
    ExternalEntropies out;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw FormatError(origin + ": empty sidecar");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = csv_split(line, lineno, origin);
    const std::vector<std::string> want = {"doc_id", "step", "h_lstm", "h_parser"};
    if (header != want) throw FormatError(origin + ":1: header must be doc_id,step,h_lstm,h_parser");
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = csv_split(line, lineno, origin);
        if (fields.size() != 4)
            throw FormatError(origin + ":" + std::to_string(lineno) + ": expected 4 fields, got " +
                              std::to_string(fields.size()));
        const double h_lstm = csv_number(fields[2], lineno, origin);
        const double h_parser = csv_number(fields[3], lineno, origin);
        if (!(h_lstm >= 0.0 && h_lstm <= 1.0) || !(h_parser >= 0.0 && h_parser <= 1.0))
            throw FormatError(origin + ":" + std::to_string(lineno) + ": entropies must lie in [0,1]");
        const std::size_t step = static_cast<std::size_t>(csv_number(fields[1], lineno, origin));
        out.rows[ExternalEntropies::key(fields[0], step)] = {h_lstm, h_parser};
    }
    return out;
}

inline ExternalEntropies read_entropy_sidecar_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    return read_entropy_sidecar(in, path);
}

struct FeatureBuild {
    FeatureMatrix matrix;
    std::size_t total_tokens = 0;  // matrix.n() + matrix.dropped == total_tokens
    std::vector<std::string> pos_levels;  // all tags seen, sorted
    std::string pos_reference;            // dropped indicator level
};

namespace detail {

struct TokenFeatures {
    double p_gen = 0.0;
    double h_gen = 0.0, h_copy = 0.0, h_ngram = 0.0;
    std::optional<double> h_lstm, h_parser;
    std::optional<double> d_edge;
    double d_root = 0.0;
    std::string pos;
};

}  // namespace detail

// One candidate row per traced token; rows missing any selected feature are
// dropped (listwise) and counted. Parses must align with the traced summary
// tokens, sentence by sentence, across each trace in order.
inline FeatureBuild build_feature_matrix(const std::vector<DecodeTrace>& traces,
                                         const std::vector<ParseTree>& parses, const KnTrigramModel& kn,
                                         const FeatureSelection& sel = {},
                                         const ExternalEntropies* external = nullptr) {
    if ((sel.external_lstm || sel.external_parser) && external == nullptr)
        throw ValueError("build_feature_matrix: external entropy columns selected but no sidecar given");
    if (!sel.entropies && !sel.structure && !sel.pos && !sel.external_lstm && !sel.external_parser)
        throw ValueError("build_feature_matrix: no features selected");

    std::vector<detail::TokenFeatures> rows;
    std::set<std::string> pos_seen;
    std::size_t tree_ix = 0;
    std::size_t sentence_no = 0;  // 1-based, across the whole parse file

    const bool need_parses = sel.structure || sel.pos;
    for (std::size_t ti = 0; ti < traces.size(); ++ti) {
        const DecodeTrace& tr = traces[ti];
        std::vector<std::string> tokens;
        tokens.reserve(tr.steps.size());
        for (const auto& s : tr.steps) tokens.push_back(s.token);

        std::vector<double> h_ngram;
        if (sel.entropies && !tokens.empty()) h_ngram = lm_entropy_series(kn, tokens);

        // Per-token structural slots, filled from the aligned trees.
        std::vector<std::optional<double>> d_edge(tokens.size());
        std::vector<double> d_root(tokens.size(), 0.0);
        std::vector<std::string> pos(tokens.size());
        if (need_parses) {
            std::size_t covered = 0;
            while (covered < tokens.size()) {
                if (tree_ix >= parses.size())
                    throw ValueError("build_feature_matrix: parses exhausted inside trace '" + tr.doc_id +
                                     "' (sentence " + std::to_string(sentence_no + 1) + ")");
                const ParseTree& tree = parses[tree_ix];
                ++tree_ix;
                ++sentence_no;
                if (covered + tree.token_count() > tokens.size())
                    throw ValueError("build_feature_matrix: sentence " + std::to_string(sentence_no) + " has " +
                                     std::to_string(tree.token_count()) + " tokens but trace '" + tr.doc_id +
                                     "' has only " + std::to_string(tokens.size() - covered) + " left");
                const auto leaf_tokens = tree.tokens();
                for (std::size_t j = 0; j < leaf_tokens.size(); ++j) {
                    if (leaf_tokens[j] != tokens[covered + j])
                        throw ValueError("build_feature_matrix: sentence " + std::to_string(sentence_no) +
                                         " token " + std::to_string(j) + " is '" + leaf_tokens[j] +
                                         "' but trace '" + tr.doc_id + "' has '" + tokens[covered + j] + "'");
                    d_root[covered + j] = static_cast<double>(root_distance(tree, j));
                    if (j > 0) d_edge[covered + j] = static_cast<double>(edge_distance(tree, j));
                    pos[covered + j] = tree.pos(j);
                    pos_seen.insert(tree.pos(j));
                }
                covered += tree.token_count();
            }
        }

        for (std::size_t t = 0; t < tr.steps.size(); ++t) {
            detail::TokenFeatures f;
            f.p_gen = tr.steps[t].p_gen;
            f.h_gen = tr.steps[t].h_gen;
            f.h_copy = tr.steps[t].h_copy;
            if (sel.entropies) f.h_ngram = h_ngram[t];
            if (external) {
                if (const auto* e = external->find(tr.doc_id, tr.steps[t].step)) {
                    f.h_lstm = e->h_lstm;
                    f.h_parser = e->h_parser;
                }
            }
            if (need_parses) {
                f.d_edge = d_edge[t];
                f.d_root = d_root[t];
                f.pos = pos[t];
            }
            rows.push_back(std::move(f));
        }
    }
    if (need_parses && tree_ix != parses.size())
        throw ValueError("build_feature_matrix: " + std::to_string(parses.size() - tree_ix) +
                         " parse sentences left over after the last trace");

    FeatureBuild out;
    out.total_tokens = rows.size();
    out.pos_levels.assign(pos_seen.begin(), pos_seen.end());
    if (sel.pos) {
        if (out.pos_levels.empty()) throw ValueError("build_feature_matrix: POS selected but no tags found");
        out.pos_reference = out.pos_levels.front();
    }

    std::vector<std::string> names;
    if (sel.entropies) {
        names.push_back("h_gen");
        names.push_back("h_copy");
        names.push_back("h_ngram");
    }
    if (sel.external_lstm) names.push_back("h_lstm");
    if (sel.external_parser) names.push_back("h_parser");
    if (sel.structure) {
        names.push_back("d_edge");
        names.push_back("d_root");
    }
    if (sel.pos)
        for (std::size_t i = 1; i < out.pos_levels.size(); ++i) names.push_back("pos:" + out.pos_levels[i]);

    std::vector<std::vector<double>> kept;
    std::vector<double> y;
    for (const auto& f : rows) {
        if (sel.structure && !f.d_edge.has_value()) continue;  // sentence-initial token
        if (sel.external_lstm && !f.h_lstm.has_value()) continue;
        if (sel.external_parser && !f.h_parser.has_value()) continue;
        std::vector<double> row;
        row.reserve(names.size());
        if (sel.entropies) {
            row.push_back(f.h_gen);
            row.push_back(f.h_copy);
            row.push_back(f.h_ngram);
        }
        if (sel.external_lstm) row.push_back(*f.h_lstm);
        if (sel.external_parser) row.push_back(*f.h_parser);
        if (sel.structure) {
            row.push_back(*f.d_edge);
            row.push_back(f.d_root);
        }
        if (sel.pos)
            for (std::size_t i = 1; i < out.pos_levels.size(); ++i)
                row.push_back(f.pos == out.pos_levels[i] ? 1.0 : 0.0);
        kept.push_back(std::move(row));
        y.push_back(f.p_gen);
    }

    out.matrix.names = names;
    out.matrix.y = std::move(y);
    out.matrix.dropped = out.total_tokens - kept.size();
    out.matrix.x = Tensor2(kept.size(), names.size());
    for (std::size_t i = 0; i < kept.size(); ++i)
        for (std::size_t j = 0; j < names.size(); ++j) out.matrix.x(i, j) = kept[i][j];
    return out;
}

// The Table-1-shaped partition of whatever columns the matrix holds:
// entropies, structure, POS.
inline std::vector<FeatureSetEntry> default_feature_partition(const FeatureMatrix& m) {
    FeatureSetEntry entropies{"entropies", {}, 0.0};
    FeatureSetEntry structure{"structure", {}, 0.0};
    FeatureSetEntry pos{"pos", {}, 0.0};
    for (const auto& name : m.names) {
        if (name.rfind("pos:", 0) == 0) pos.features.push_back(name);
        else if (name == "d_edge" || name == "d_root") structure.features.push_back(name);
        else entropies.features.push_back(name);
    }
    std::vector<FeatureSetEntry> out;
    if (!entropies.features.empty()) out.push_back(std::move(entropies));
    if (!structure.features.empty()) out.push_back(std::move(structure));
    if (!pos.features.empty()) out.push_back(std::move(pos));
    return out;
}

}  // namespace pglab
