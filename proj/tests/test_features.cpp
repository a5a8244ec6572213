#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "pglab/features.hpp"

using namespace pglab;

namespace {

DecodeTrace make_trace(const std::string& doc_id, const std::vector<std::string>& tokens) {
    DecodeTrace tr;
    tr.doc_id = doc_id;
    tr.article_tokens = tokens;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        TokenStep s;
        s.step = i;
        s.token = tokens[i];
        s.origin = TokenOrigin::kVocab;
        s.p_gen = 0.1 + 0.07 * static_cast<double>(i);
        s.p_gen_raw = s.p_gen;
        s.h_gen = 0.5;
        s.h_copy = 0.4;
        s.attention = Tensor1(tokens.size(), 1.0 / static_cast<double>(tokens.size()));
        s.copy_support = 2;
        tr.steps.push_back(std::move(s));
    }
    return tr;
}

KnTrigramModel toy_lm() {
    return KnTrigramModel::train(
        {"the", "dog", "ran", "a", "cat", "the", "cat", "dog", "ran", "a"}, 0.75);
}

std::vector<DecodeTrace> two_traces() {
    return {make_trace("doc-a", {"the", "dog", "ran", "a", "cat"}),
            make_trace("doc-b", {"the", "cat"})};
}

std::vector<ParseTree> aligned_parses() {
    return {parse_bracketed("(S (NP (DT the) (NN dog)) (VP (VBD ran)))"),
            parse_bracketed("(S (NP (DT a) (NN cat)))"),
            parse_bracketed("(NP (DT the) (NN cat))")};
}

}  // namespace

TEST_CASE("full matrix assembly with aligned parses") {
    const auto traces = two_traces();
    const auto parses = aligned_parses();
    const FeatureBuild build = build_feature_matrix(traces, parses, toy_lm());

    CHECK(build.total_tokens == 7);
    CHECK(build.pos_levels == std::vector<std::string>{"DT", "NN", "VBD"});
    CHECK(build.pos_reference == "DT");
    CHECK(build.matrix.names ==
          std::vector<std::string>{"h_gen", "h_copy", "h_ngram", "d_edge", "d_root", "pos:NN", "pos:VBD"});

    // Sentence-initial tokens lack the previous-token distance: "the", "a",
    // and the second trace's "the" drop, leaving dog, ran, cat, cat.
    REQUIRE(build.matrix.n() == 4);
    CHECK(build.matrix.dropped == 3);
    CHECK(build.matrix.n() + build.matrix.dropped == build.total_tokens);

    const std::size_t d_edge = build.matrix.column("d_edge");
    const std::size_t d_root = build.matrix.column("d_root");
    const std::size_t pos_nn = build.matrix.column("pos:NN");
    const std::size_t pos_vbd = build.matrix.column("pos:VBD");
    // dog
    CHECK(build.matrix.x(0, d_edge) == 4.0);
    CHECK(build.matrix.x(0, d_root) == 3.0);
    CHECK(build.matrix.x(0, pos_nn) == 1.0);
    CHECK(build.matrix.x(0, pos_vbd) == 0.0);
    // ran
    CHECK(build.matrix.x(1, d_edge) == 6.0);
    CHECK(build.matrix.x(1, d_root) == 3.0);
    CHECK(build.matrix.x(1, pos_vbd) == 1.0);
    // cat in "a cat"
    CHECK(build.matrix.x(2, d_edge) == 4.0);
    CHECK(build.matrix.x(2, d_root) == 3.0);
    // cat in the second trace's flat tree
    CHECK(build.matrix.x(3, d_edge) == 4.0);
    CHECK(build.matrix.x(3, d_root) == 2.0);

    // The response column carries p_gen of the kept tokens.
    CHECK(build.matrix.y[0] == Catch::Approx(0.1 + 0.07 * 1));
    CHECK(build.matrix.y[1] == Catch::Approx(0.1 + 0.07 * 2));
    CHECK(build.matrix.y[2] == Catch::Approx(0.1 + 0.07 * 4));
    CHECK(build.matrix.y[3] == Catch::Approx(0.1 + 0.07 * 1));

    // The n-gram entropy column matches the series computed directly.
    const auto kn = toy_lm();
    const auto series_a = lm_entropy_series(kn, {"the", "dog", "ran", "a", "cat"});
    const std::size_t h_ngram = build.matrix.column("h_ngram");
    CHECK(build.matrix.x(0, h_ngram) == series_a[1]);
    CHECK(build.matrix.x(1, h_ngram) == series_a[2]);
    CHECK(build.matrix.x(2, h_ngram) == series_a[4]);
}

TEST_CASE("selection flags shape the columns") {
    const auto traces = two_traces();
    const auto kn = toy_lm();

    FeatureSelection only_entropies;
    only_entropies.structure = false;
    only_entropies.pos = false;
    const FeatureBuild e = build_feature_matrix(traces, {}, kn, only_entropies);
    CHECK(e.matrix.names == std::vector<std::string>{"h_gen", "h_copy", "h_ngram"});
    CHECK(e.matrix.n() == 7);  // nothing dropped without the structure filter
    CHECK(e.matrix.dropped == 0);

    FeatureSelection pos_only;
    pos_only.entropies = false;
    pos_only.structure = false;
    const FeatureBuild p = build_feature_matrix(traces, aligned_parses(), kn, pos_only);
    CHECK(p.matrix.names == std::vector<std::string>{"pos:NN", "pos:VBD"});
    CHECK(p.matrix.n() == 7);  // POS alone keeps sentence-initial tokens
    for (std::size_t i = 0; i < p.matrix.n(); ++i) {
        const double row_sum = p.matrix.x(i, 0) + p.matrix.x(i, 1);
        CHECK((row_sum == 0.0 || row_sum == 1.0));
    }

    FeatureSelection none;
    none.entropies = none.structure = none.pos = false;
    CHECK_THROWS_AS(build_feature_matrix(traces, {}, kn, none), ValueError);
}

TEST_CASE("misaligned parses are rejected with context") {
    const auto traces = two_traces();
    const auto kn = toy_lm();

    auto parses = aligned_parses();
    parses[1] = parse_bracketed("(S (NP (DT a) (NN dog)))");  // should be "cat"
    try {
        build_feature_matrix(traces, parses, kn);
        FAIL("expected a token mismatch");
    } catch (const ValueError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("sentence 2") != std::string::npos);
        CHECK(msg.find("'dog'") != std::string::npos);
        CHECK(msg.find("'cat'") != std::string::npos);
        CHECK(msg.find("doc-a") != std::string::npos);
    }

    CHECK_THROWS_AS(build_feature_matrix(traces, {aligned_parses()[0]}, kn), ValueError);

    auto extra = aligned_parses();
    extra.push_back(parse_bracketed("(NN stray)"));
    try {
        build_feature_matrix(traces, extra, kn);
        FAIL("expected leftover parses");
    } catch (const ValueError& e) {
        CHECK(std::string(e.what()).find("left over") != std::string::npos);
    }

    // A sentence longer than the trace's remaining tokens.
    const std::vector<DecodeTrace> shorty = {make_trace("doc-s", {"the"})};
    CHECK_THROWS_AS(
        build_feature_matrix(shorty, {parse_bracketed("(S (DT the) (NN dog))")}, kn),
        ValueError);
}

TEST_CASE("external entropies join by doc and step with listwise deletion") {
    const auto traces = two_traces();
    const auto kn = toy_lm();
    ExternalEntropies ext;
    for (std::size_t i = 0; i < 5; ++i) ext.rows[ExternalEntropies::key("doc-a", i)] = {0.3, 0.6};
    ext.rows[ExternalEntropies::key("doc-b", 0)] = {0.2, 0.9};
    // doc-b step 1 is missing on purpose.

    FeatureSelection sel;
    sel.structure = false;
    sel.pos = false;
    sel.external_lstm = true;
    sel.external_parser = true;
    const FeatureBuild build = build_feature_matrix(traces, {}, kn, sel, &ext);
    CHECK(build.matrix.names ==
          std::vector<std::string>{"h_gen", "h_copy", "h_ngram", "h_lstm", "h_parser"});
    CHECK(build.matrix.n() == 6);
    CHECK(build.matrix.dropped == 1);
    CHECK(build.matrix.x(5, build.matrix.column("h_lstm")) == 0.2);
    CHECK(build.matrix.x(5, build.matrix.column("h_parser")) == 0.9);

    CHECK_THROWS_AS(build_feature_matrix(traces, {}, kn, sel, nullptr), ValueError);
}

TEST_CASE("default partition groups the canonical columns") {
    const FeatureBuild build = build_feature_matrix(two_traces(), aligned_parses(), toy_lm());
    const auto partition = default_feature_partition(build.matrix);
    REQUIRE(partition.size() == 3);
    CHECK(partition[0].set_name == "entropies");
    CHECK(partition[0].features == std::vector<std::string>{"h_gen", "h_copy", "h_ngram"});
    CHECK(partition[1].set_name == "structure");
    CHECK(partition[1].features == std::vector<std::string>{"d_edge", "d_root"});
    CHECK(partition[2].set_name == "pos");
    CHECK(partition[2].features == std::vector<std::string>{"pos:NN", "pos:VBD"});
}
