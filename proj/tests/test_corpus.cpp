#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <set>

#include "pglab/corpus.hpp"

using namespace pglab;

namespace {
SyntheticTaskSpec base_spec(TaskKind kind) {
    SyntheticTaskSpec s;
    s.kind = kind;
    s.content_vocab = 20;
    s.src_len_min = 4;
    s.src_len_max = 9;
    s.copy_window = 3;
    s.corpus_size = 50;
    s.seed = 0;
    s.bijection_seed = 1;
    return s;
}
}  // namespace

TEST_CASE("copy task target is a source prefix window") {
    SyntheticTaskSpec spec = base_spec(TaskKind::kCopy);
    Corpus c = make_synthetic_corpus(spec);
    REQUIRE(c.size() == 50);
    for (const auto& ex : c) {
        REQUIRE(ex.source.size() >= 4);
        REQUIRE(ex.source.size() <= 9);
        REQUIRE(ex.target.size() == std::min<std::size_t>(3, ex.source.size()));
        for (std::size_t i = 0; i < ex.target.size(); ++i) REQUIRE(ex.target[i] == ex.source[i]);
    }
}

TEST_CASE("substitution task maps tokens through a fixed-point-free bijection") {
    SyntheticTaskSpec spec = base_spec(TaskKind::kSubstitution);
    auto bij = substitution_bijection(spec);
    REQUIRE(bij.size() == 20);
    std::set<std::size_t> image(bij.begin(), bij.end());
    REQUIRE(image.size() == 20);  // a permutation
    for (std::size_t i = 0; i < bij.size(); ++i) REQUIRE(bij[i] != i);  // no fixed points

    Corpus c = make_synthetic_corpus(spec);
    for (const auto& ex : c) {
        REQUIRE(ex.target.size() == ex.source.size());
        for (std::size_t i = 0; i < ex.source.size(); ++i) {
            REQUIRE(ex.target[i] != ex.source[i]);
            // consistent mapping: same source token, same target token
        }
    }
    // spot-check consistency of the mapping across the corpus
    std::map<std::string, std::string> seen;
    for (const auto& ex : c)
        for (std::size_t i = 0; i < ex.source.size(); ++i) {
            auto it = seen.find(ex.source[i]);
            if (it == seen.end())
                seen.emplace(ex.source[i], ex.target[i]);
            else
                REQUIRE(it->second == ex.target[i]);
        }
}

TEST_CASE("same spec and seed give identical corpora") {
    SyntheticTaskSpec spec = base_spec(TaskKind::kCopy);
    Corpus a = make_synthetic_corpus(spec);
    Corpus b = make_synthetic_corpus(spec);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].source == b[i].source);
        REQUIRE(a[i].target == b[i].target);
    }
    spec.seed = 99;
    Corpus d = make_synthetic_corpus(spec);
    bool differs = false;
    for (std::size_t i = 0; i < a.size() && !differs; ++i) differs = a[i].source != d[i].source;
    REQUIRE(differs);
}

TEST_CASE("bijection needs at least two content types") {
    SyntheticTaskSpec spec = base_spec(TaskKind::kSubstitution);
    spec.content_vocab = 1;
    REQUIRE_THROWS_AS(substitution_bijection(spec), ValueError);
    REQUIRE_THROWS_AS(make_synthetic_corpus(spec), ValueError);
}

TEST_CASE("substitution rejects held-out types") {
    SyntheticTaskSpec spec = base_spec(TaskKind::kSubstitution);
    spec.heldout_types = 3;
    REQUIRE_THROWS_AS(make_synthetic_corpus(spec), ValueError);
}

TEST_CASE("task vocabulary excludes the held-out tail") {
    SyntheticTaskSpec spec = base_spec(TaskKind::kCopy);
    spec.heldout_types = 4;
    Vocabulary v = build_task_vocab(spec);
    REQUIRE(v.size() == 4 + 16);
    REQUIRE(v.contains(content_token(15)));
    REQUIRE(!v.contains(content_token(16)));
    REQUIRE(!v.contains(content_token(19)));
}

TEST_CASE("corpus TSV roundtrip") {
    SyntheticTaskSpec spec = base_spec(TaskKind::kCopy);
    spec.corpus_size = 12;
    Corpus c = make_synthetic_corpus(spec);
    const std::string path = "corpus_roundtrip_test.tsv";
    write_corpus_tsv(c, path);
    Corpus r = read_corpus_tsv(path);
    REQUIRE(r.size() == c.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
        REQUIRE(r[i].source == c[i].source);
        REQUIRE(r[i].target == c[i].target);
    }
    std::remove(path.c_str());
    REQUIRE_THROWS_AS(read_corpus_tsv("no_such_file.tsv"), IoError);
}

TEST_CASE("vocab file roundtrip") {
    Vocabulary v = Vocabulary::from_tokens({"alpha", "beta", "gamma"});
    const std::string path = "vocab_roundtrip_test.txt";
    write_vocab_file(v, path);
    Vocabulary r = read_vocab_file(path);
    REQUIRE(r.size() == v.size());
    REQUIRE(r.id("beta") == v.id("beta"));
    std::remove(path.c_str());
}
