#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "pglab/errors.hpp"

namespace pglab {

// Token ids reserved at the front of every vocabulary.
enum ReservedId : int {
    kUnkId = 0,
    kStartId = 1,
    kStopId = 2,
    kPadId = 3,
};

inline const char* kUnkToken = "<unk>";
inline const char* kStartToken = "<s>";
inline const char* kStopToken = "</s>";
inline const char* kPadToken = "<pad>";

// Token <-> id bijection with fixed reserved slots 0-3.
class Vocabulary {
public:
    Vocabulary() {
        add(kUnkToken);
        add(kStartToken);
        add(kStopToken);
        add(kPadToken);
    }

    static Vocabulary from_tokens(const std::vector<std::string>& tokens) {
        Vocabulary v;
        for (const auto& t : tokens) v.add(t);
        return v;
    }

    // Returns the id (existing or newly assigned).
    int add(const std::string& token) {
        auto it = ids_.find(token);
        if (it != ids_.end()) return it->second;
        const int id = static_cast<int>(tokens_.size());
        ids_.emplace(token, id);
        tokens_.push_back(token);
        return id;
    }

    bool contains(const std::string& token) const { return ids_.count(token) > 0; }

    int id(const std::string& token) const {
        auto it = ids_.find(token);
        return it == ids_.end() ? kUnkId : it->second;
    }

    // Strict lookup; throws on unknown token.
    int id_strict(const std::string& token) const {
        auto it = ids_.find(token);
        if (it == ids_.end()) throw ValueError("Vocabulary: unknown token '" + token + "'");
        return it->second;
    }

    const std::string& token(int id) const {
        if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
            throw ValueError("Vocabulary: id out of range: " + std::to_string(id));
        return tokens_[static_cast<std::size_t>(id)];
    }

    std::size_t size() const { return tokens_.size(); }

    const std::vector<std::string>& tokens() const { return tokens_; }

    void validate() const {
        if (tokens_.size() < 5) throw ValueError("Vocabulary: size must be >= 5");
        if (tokens_.size() != ids_.size()) throw ValueError("Vocabulary: token/id tables diverged");
    }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> ids_;
};

// Per-document view of a source token sequence against a vocabulary.
// Source-only (out-of-vocabulary) token types get extended ids starting at
// vocab size, assigned in order of first occurrence; these are the extra
// outcomes of the extended output distribution.
struct SourceIndex {
    std::vector<std::string> tokens;       // source tokens, in order
    std::vector<int> vocab_ids;            // per position, UNK where OOV
    std::vector<int> extended_ids;         // per position, vocab id or V + k
    std::vector<std::string> oov_types;    // k -> token text
    std::size_t vocab_size = 0;
    std::size_t distinct_types = 0;        // distinct source token types

    std::size_t extended_size() const { return vocab_size + oov_types.size(); }

    // Token text for an extended id (vocab or source-only).
    std::string token_for(const Vocabulary& vocab, int extended_id) const {
        if (extended_id < static_cast<int>(vocab_size)) return vocab.token(extended_id);
        const std::size_t k = static_cast<std::size_t>(extended_id) - vocab_size;
        if (k >= oov_types.size()) throw ValueError("SourceIndex: extended id out of range");
        return oov_types[k];
    }
};

inline SourceIndex index_source(const std::vector<std::string>& tokens, const Vocabulary& vocab) {
    if (tokens.empty()) throw ValueError("index_source: empty article");
    SourceIndex idx;
    idx.tokens = tokens;
    idx.vocab_size = vocab.size();
    idx.vocab_ids.reserve(tokens.size());
    idx.extended_ids.reserve(tokens.size());
    std::unordered_map<std::string, int> oov_map;
    std::unordered_map<std::string, int> seen;
    for (const auto& t : tokens) {
        seen.emplace(t, 1);
        if (vocab.contains(t)) {
            const int id = vocab.id(t);
            idx.vocab_ids.push_back(id);
            idx.extended_ids.push_back(id);
        } else {
            idx.vocab_ids.push_back(kUnkId);
            auto it = oov_map.find(t);
            int ext;
            if (it == oov_map.end()) {
                ext = static_cast<int>(idx.vocab_size + idx.oov_types.size());
                oov_map.emplace(t, ext);
                idx.oov_types.push_back(t);
            } else {
                ext = it->second;
            }
            idx.extended_ids.push_back(ext);
        }
    }
    idx.distinct_types = seen.size();
    return idx;
}

}  // namespace pglab
