#include <catch2/catch_amalgamated.hpp>

#include "pglab/vocab.hpp"

using namespace pglab;

TEST_CASE("reserved ids are fixed at 0-3") {
    Vocabulary v;
    REQUIRE(v.id(kUnkToken) == kUnkId);
    REQUIRE(v.id(kStartToken) == kStartId);
    REQUIRE(v.id(kStopToken) == kStopId);
    REQUIRE(v.id(kPadToken) == kPadId);
    REQUIRE(kUnkId == 0);
    REQUIRE(kStartId == 1);
    REQUIRE(kStopId == 2);
    REQUIRE(kPadId == 3);
    REQUIRE(v.size() == 4);
}

TEST_CASE("add is idempotent and lookup falls back to UNK") {
    Vocabulary v;
    int a = v.add("alpha");
    REQUIRE(v.add("alpha") == a);
    REQUIRE(v.id("alpha") == a);
    REQUIRE(v.token(a) == "alpha");
    REQUIRE(v.id("never-seen") == kUnkId);
    REQUIRE_THROWS_AS(v.id_strict("never-seen"), ValueError);
    REQUIRE_THROWS_AS(v.token(999), ValueError);
    REQUIRE(v.contains("alpha"));
    REQUIRE(!v.contains("beta"));
}

TEST_CASE("validate requires the reserved tokens plus one") {
    Vocabulary v;
    REQUIRE_THROWS_AS(v.validate(), ValueError);
    v.add("x");
    REQUIRE_NOTHROW(v.validate());
}

TEST_CASE("index_source assigns extended ids by first occurrence") {
    Vocabulary v = Vocabulary::from_tokens({"a", "b"});
    const int V = static_cast<int>(v.size());
    SourceIndex idx = index_source({"a", "zz", "b", "a", "qq", "zz"}, v);
    REQUIRE(idx.vocab_size == static_cast<std::size_t>(V));
    REQUIRE(idx.oov_types == std::vector<std::string>{"zz", "qq"});
    REQUIRE(idx.extended_ids == std::vector<int>{v.id("a"), V, v.id("b"), v.id("a"), V + 1, V});
    REQUIRE(idx.vocab_ids == std::vector<int>{v.id("a"), kUnkId, v.id("b"), v.id("a"), kUnkId, kUnkId});
    REQUIRE(idx.distinct_types == 4);
    REQUIRE(idx.extended_size() == static_cast<std::size_t>(V) + 2);
    REQUIRE(idx.token_for(v, V + 1) == "qq");
    REQUIRE(idx.token_for(v, v.id("b")) == "b");
}

TEST_CASE("index_source rejects an empty article") {
    Vocabulary v = Vocabulary::from_tokens({"a"});
    REQUIRE_THROWS_AS(index_source({}, v), ValueError);
}
