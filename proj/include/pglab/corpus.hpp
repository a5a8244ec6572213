#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pglab/errors.hpp"
#include "pglab/rng.hpp"
#include "pglab/vocab.hpp"

namespace pglab {

struct TrainExample {
    std::vector<std::string> source, target;
};

using Corpus = std::vector<TrainExample>;

enum class TaskKind { kCopy, kSubstitution };

// Two synthetic summarization analogs: an extractive task whose target is a
// prefix window of the source, and an abstractive one whose target is the
// source pushed through a fixed token bijection, so the right answer is
// never copyable.
struct SyntheticTaskSpec {
    TaskKind kind = TaskKind::kCopy;
    std::size_t content_vocab = 60;   // distinct content token types
    std::size_t src_len_min = 8;
    std::size_t src_len_max = 16;
    std::size_t copy_window = 6;      // target length for the copy task
    std::size_t heldout_types = 0;    // copy task: types kept out of the model vocab
    std::uint64_t bijection_seed = 0;
    std::size_t corpus_size = 0;
    std::uint64_t seed = 0;

    void validate() const {
        if (content_vocab < 2) throw ValueError("SyntheticTaskSpec: need at least 2 content types");
        if (src_len_min < 1 || src_len_max < src_len_min) throw ValueError("SyntheticTaskSpec: bad length range");
        if (corpus_size < 1) throw ValueError("SyntheticTaskSpec: empty corpus");
        if (kind == TaskKind::kCopy && copy_window < 1)
            throw ValueError("SyntheticTaskSpec: copy window must be >= 1");
        if (heldout_types >= content_vocab)
            throw ValueError("SyntheticTaskSpec: held-out slice swallows the whole vocabulary");
        if (kind == TaskKind::kSubstitution && heldout_types != 0)
            throw ValueError("SyntheticTaskSpec: substitution targets must stay inside the vocabulary");
    }
};

inline std::string content_token(std::size_t i) { return "w" + std::to_string(i); }

// Fixed-point-free permutation of the content ids (Sattolo's algorithm), so
// no source token ever maps to itself.
inline std::vector<std::size_t> substitution_bijection(const SyntheticTaskSpec& spec) {
    spec.validate();
    if (spec.content_vocab < 2) throw ValueError("substitution_bijection: vocab too small");
    std::vector<std::size_t> perm(spec.content_vocab);
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    Rng rng(spec.bijection_seed);
    auto s = rng.stream("bijection");
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(s.uniform_u64(0, i - 1));
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

inline Corpus make_synthetic_corpus(const SyntheticTaskSpec& spec) {
    spec.validate();
    std::vector<std::size_t> bij;
    if (spec.kind == TaskKind::kSubstitution) bij = substitution_bijection(spec);

    Rng rng(spec.seed);
    auto s = rng.stream("corpus");
    Corpus out;
    out.reserve(spec.corpus_size);
    for (std::size_t e = 0; e < spec.corpus_size; ++e) {
        const std::size_t len = spec.src_len_min + s.index(spec.src_len_max - spec.src_len_min + 1);
        TrainExample ex;
        ex.source.reserve(len);
        std::vector<std::size_t> ids(len);
        for (std::size_t i = 0; i < len; ++i) {
            ids[i] = s.index(spec.content_vocab);
            ex.source.push_back(content_token(ids[i]));
        }
        if (spec.kind == TaskKind::kCopy) {
            const std::size_t w = std::min(spec.copy_window, len);
            ex.target.assign(ex.source.begin(), ex.source.begin() + static_cast<std::ptrdiff_t>(w));
        } else {
            ex.target.reserve(len);
            for (std::size_t i = 0; i < len; ++i) ex.target.push_back(content_token(bij[ids[i]]));
        }
        out.push_back(std::move(ex));
    }
    return out;
}

// Model vocabulary for a task: all content types except the held-out tail
// slice, which stays reachable only through the copy path.
inline Vocabulary build_task_vocab(const SyntheticTaskSpec& spec) {
    spec.validate();
    Vocabulary v;
    for (std::size_t i = 0; i + spec.heldout_types < spec.content_vocab; ++i) v.add(content_token(i));
    v.validate();
    return v;
}

inline std::vector<std::string> split_tokens(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

// Corpus file format: one example per line, source TAB target, tokens
// space-separated. Blank lines are skipped.
inline void write_corpus_tsv(const Corpus& corpus, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("write_corpus_tsv: cannot open " + path);
    for (const auto& ex : corpus) f << join_tokens(ex.source) << '\t' << join_tokens(ex.target) << '\n';
    if (!f) throw IoError("write_corpus_tsv: write failed for " + path);
}

inline Corpus read_corpus_tsv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("read_corpus_tsv: cannot open " + path);
    Corpus out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw FormatError("read_corpus_tsv: missing tab at " + path + ":" + std::to_string(lineno));
        TrainExample ex;
        ex.source = split_tokens(line.substr(0, tab));
        ex.target = split_tokens(line.substr(tab + 1));
        if (ex.source.empty())
            throw FormatError("read_corpus_tsv: empty source at " + path + ":" + std::to_string(lineno));
        out.push_back(std::move(ex));
    }
    return out;
}

// Vocabulary sidecar: one token per line, reserved tokens implicit.
inline void write_vocab_file(const Vocabulary& vocab, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw IoError("write_vocab_file: cannot open " + path);
    for (std::size_t id = 4; id < vocab.size(); ++id) f << vocab.token(static_cast<int>(id)) << '\n';
    if (!f) throw IoError("write_vocab_file: write failed for " + path);
}

inline Vocabulary read_vocab_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("read_vocab_file: cannot open " + path);
    Vocabulary v;
    std::string line;
    while (std::getline(f, line)) {
        if (!line.empty()) v.add(line);
    }
    v.validate();
    return v;
}

}  // namespace pglab
