#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pglab/kn_lm.hpp"
#include "pglab/rng.hpp"

using namespace pglab;

namespace {

// Brute-force interpolated Kneser-Ney with absolute discounting, recounted
// from scratch over string tuples. Mirrors the published formula, not the
// implementation's tables.
struct BruteKn {
    double d;
    std::vector<std::string> types;  // UNK first
    std::map<std::vector<std::string>, int> c3, c2;
    std::map<std::pair<std::string, std::string>, std::set<std::string>> left_of_bigram;  // (v,w) -> {u}
    std::map<std::string, std::set<std::string>> left_of_unigram;                         // w -> {v}

    explicit BruteKn(const std::vector<std::string>& corpus, double discount) : d(discount) {
        std::set<std::string> seen;
        types.push_back("<unk>");
        seen.insert("<unk>");
        for (const auto& t : corpus)
            if (seen.insert(t).second) types.push_back(t);
        for (std::size_t i = 0; i + 2 < corpus.size(); ++i) {
            c3[{corpus[i], corpus[i + 1], corpus[i + 2]}] += 1;
            left_of_bigram[{corpus[i + 1], corpus[i + 2]}].insert(corpus[i]);
        }
        for (std::size_t i = 0; i + 1 < corpus.size(); ++i) {
            c2[{corpus[i], corpus[i + 1]}] += 1;
            left_of_unigram[corpus[i + 1]].insert(corpus[i]);
        }
    }

    double p1(const std::string& w) const {
        const double uniform = 1.0 / static_cast<double>(types.size());
        double bigram_types = static_cast<double>(c2.size());
        if (bigram_types == 0.0) return uniform;
        auto it = left_of_unigram.find(w);
        const double cont = it == left_of_unigram.end() ? 0.0 : static_cast<double>(it->second.size());
        const double head = std::max(cont - d, 0.0) / bigram_types;
        const double gamma = d * static_cast<double>(left_of_unigram.size()) / bigram_types;
        return head + gamma * uniform;
    }

    double p2(const std::string& v, const std::string& w) const {
        double total = 0.0, ctx_types = 0.0;
        for (const auto& [bg, us] : left_of_bigram) {
            if (bg.first != v) continue;
            total += static_cast<double>(us.size());
            ctx_types += 1.0;
        }
        if (total == 0.0) return p1(w);
        auto it = left_of_bigram.find({v, w});
        const double cont = it == left_of_bigram.end() ? 0.0 : static_cast<double>(it->second.size());
        const double head = std::max(cont - d, 0.0) / total;
        const double gamma = d * ctx_types / total;
        return head + gamma * p1(w);
    }

    double p3(const std::string& u, const std::string& v, const std::string& w) const {
        double total = 0.0, ctx_types = 0.0;
        for (const auto& [tg, c] : c3) {
            if (tg[0] != u || tg[1] != v) continue;
            total += static_cast<double>(c);
            ctx_types += 1.0;
        }
        if (total == 0.0) return p2(v, w);
        auto it = c3.find({u, v, w});
        const double count = it == c3.end() ? 0.0 : static_cast<double>(it->second);
        const double head = std::max(count - d, 0.0) / total;
        const double gamma = d * ctx_types / total;
        return head + gamma * p2(v, w);
    }
};

std::vector<std::string> toy_corpus(std::size_t n, std::size_t alphabet, std::uint64_t seed) {
    Rng rng(seed);
    auto st = rng.stream("kn-toy");
    std::vector<std::string> corpus;
    for (std::size_t i = 0; i < n; ++i)
        corpus.push_back(std::string(1, static_cast<char>('a' + st.index(alphabet))));
    return corpus;
}

}  // namespace

TEST_CASE("trigram conditionals match the brute-force formula") {
    const auto corpus = toy_corpus(150, 5, 90210);
    const KnTrigramModel model = KnTrigramModel::train(corpus, 0.75);
    const BruteKn brute(corpus, 0.75);
    REQUIRE(model.vocab_size() == brute.types.size());

    double max_err = 0.0;
    for (const auto& u : brute.types) {
        for (const auto& v : brute.types) {
            for (const auto& w : brute.types) {
                const double got = model.prob({u, v}, w);
                const double want = brute.p3(u, v, w);
                max_err = std::max(max_err, std::abs(got - want));
                CHECK(got > 0.0);
            }
        }
    }
    INFO("max abs error " << max_err);
    CHECK(max_err < 1e-10);

    for (const auto& v : brute.types)
        for (const auto& w : brute.types)
            CHECK(std::abs(model.prob({v}, w) - brute.p2(v, w)) < 1e-10);
    for (const auto& w : brute.types)
        CHECK(std::abs(model.prob({}, w) - brute.p1(w)) < 1e-10);
}

TEST_CASE("every context normalizes") {
    const auto corpus = toy_corpus(200, 6, 313);
    const KnTrigramModel model = KnTrigramModel::train(corpus, 0.75);
    const auto& types = model.types();

    // Unigram level.
    {
        const auto dist = model.next_distribution({});
        double sum = 0.0;
        for (double p : dist) sum += p;
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
    // All bigram and a grid of trigram contexts, seen or unseen.
    for (const auto& v : types) {
        const auto dist = model.next_distribution({v});
        double sum = 0.0;
        for (double p : dist) {
            CHECK(p > 0.0);
            sum += p;
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
    for (const auto& u : types) {
        for (const auto& v : types) {
            const auto dist = model.next_distribution({u, v});
            double sum = 0.0;
            for (double p : dist) sum += p;
            CHECK(std::abs(sum - 1.0) < 1e-9);
        }
    }
    // Longer contexts use only the last two tokens.
    CHECK(model.prob({types[1], types[2], types[3]}, types[1]) ==
          Catch::Approx(model.prob({types[2], types[3]}, types[1])).margin(0.0));
}

TEST_CASE("unknown tokens fall to the unknown type") {
    const auto corpus = toy_corpus(120, 4, 5150);
    const KnTrigramModel model = KnTrigramModel::train(corpus, 0.75);
    CHECK(model.type_id("never-seen") == 0);
    CHECK(model.type_id("<unk>") == 0);
    CHECK(model.prob({"never-seen", "also-new"}, "still-new") > 0.0);
    CHECK(model.prob({"never-seen", "also-new"}, "still-new") ==
          Catch::Approx(model.prob({"<unk>", "<unk>"}, "<unk>")).margin(0.0));
}

TEST_CASE("training validation") {
    CHECK_THROWS_AS(KnTrigramModel::train({}, 0.75), ValueError);
    CHECK_THROWS_AS(KnTrigramModel::train({"a", "b"}, 0.75), ValueError);
    CHECK_THROWS_AS(KnTrigramModel::train(toy_corpus(50, 3, 1), 0.0), ValueError);
    CHECK_THROWS_AS(KnTrigramModel::train(toy_corpus(50, 3, 1), 1.0), ValueError);
}

TEST_CASE("entropy series over a token sequence") {
    const auto corpus = toy_corpus(180, 5, 777);
    const KnTrigramModel model = KnTrigramModel::train(corpus, 0.75);
    const std::vector<std::string> tokens = {"a", "b", "c", "z", "a"};
    const auto series = lm_entropy_series(model, tokens);
    REQUIRE(series.size() == tokens.size());
    for (double h : series) {
        CHECK(h >= 0.0);
        CHECK(h <= 1.0);
    }
    CHECK_THROWS_AS(lm_entropy_series(model, {}), ValueError);
}
