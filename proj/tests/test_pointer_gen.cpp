#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "pglab/pointer_gen.hpp"

using namespace pglab;

namespace {

// Scalar-loop attention reference: raw loops and a local softmax, sharing
// nothing with the implementation.
void attention_oracle(const Tensor1& s, const Tensor2& states, const Tensor1* cov, const AttentionParams& ap,
                      std::vector<double>& attn_out, std::vector<double>& hstar_out) {
    const std::size_t n = states.rows(), A = ap.score_v.size();
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        double e = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            double pre = ap.bias[a];
            for (std::size_t j = 0; j < states.cols(); ++j) pre += ap.w_enc(a, j) * states(i, j);
            for (std::size_t j = 0; j < s.size(); ++j) pre += ap.w_dec(a, j) * s[j];
            if (cov) pre += ap.w_cov[a] * (*cov)[i];
            e += ap.score_v[a] * std::tanh(pre);
        }
        scores[i] = e;
    }
    double mx = scores[0];
    for (double v : scores) mx = std::max(mx, v);
    double z = 0.0;
    attn_out.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        attn_out[i] = std::exp(scores[i] - mx);
        z += attn_out[i];
    }
    for (std::size_t i = 0; i < n; ++i) attn_out[i] /= z;
    hstar_out.assign(states.cols(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < states.cols(); ++j) hstar_out[j] += attn_out[i] * states(i, j);
}

AttentionParams random_attention(std::size_t A, std::size_t H2, std::size_t H, bool coverage, RngStream& s) {
    AttentionParams ap;
    ap.w_enc = Tensor2(A, H2);
    ap.w_dec = Tensor2(A, H);
    if (coverage) ap.w_cov = Tensor1(A);
    ap.score_v = Tensor1(A);
    ap.bias = Tensor1(A);
    for (std::size_t i = 0; i < ap.w_enc.size(); ++i) ap.w_enc.data()[i] = s.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < ap.w_dec.size(); ++i) ap.w_dec.data()[i] = s.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < A; ++i) {
        if (coverage) ap.w_cov[i] = s.uniform(-1.0, 1.0);
        ap.score_v[i] = s.uniform(-1.0, 1.0);
        ap.bias[i] = s.uniform(-1.0, 1.0);
    }
    return ap;
}

}  // namespace

TEST_CASE("attention over a single source token is degenerate") {
    Rng rng(0);
    auto s = rng.stream("attn1");
    AttentionParams ap = random_attention(3, 4, 2, false, s);
    Tensor2 states(1, 4);
    for (std::size_t j = 0; j < 4; ++j) states(0, j) = s.uniform(-1.0, 1.0);
    AttentionResult r = attention_step(Tensor1{0.3, -0.2}, states, nullptr, ap);
    REQUIRE(r.attn.size() == 1);
    REQUIRE(r.attn[0] == 1.0);
    for (std::size_t j = 0; j < 4; ++j) REQUIRE(r.h_star[j] == states(0, j));
}

TEST_CASE("identical encoder states and zero coverage give uniform attention") {
    Rng rng(1);
    auto s = rng.stream("attn-uniform");
    AttentionParams ap = random_attention(3, 4, 2, true, s);
    Tensor2 states(5, 4);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 4; ++j) states(i, j) = 0.1 * (1.0 + static_cast<double>(j));
    Tensor1 cov(5);
    AttentionResult r = attention_step(Tensor1{0.5, 0.5}, states, &cov, ap);
    for (std::size_t i = 0; i < 5; ++i) REQUIRE(std::abs(r.attn[i] - 0.2) <= 1e-15);
}

TEST_CASE("attention matches scalar-loop oracle, with and without coverage") {
    Rng rng(0);
    auto s = rng.stream("attn-oracle");
    for (int it = 0; it < 50; ++it) {
        bool coverage = (it % 2) == 1;
        std::size_t n = 1 + s.index(8), A = 1 + s.index(5), H = 1 + s.index(5);
        AttentionParams ap = random_attention(A, 2 * H, H, coverage, s);
        Tensor2 states(n, 2 * H);
        for (std::size_t i = 0; i < states.size(); ++i) states.data()[i] = s.uniform(-2.0, 2.0);
        Tensor1 dec(H), cov(n);
        for (std::size_t i = 0; i < H; ++i) dec[i] = s.uniform(-2.0, 2.0);
        for (std::size_t i = 0; i < n; ++i) cov[i] = s.uniform(0.0, 3.0);
        AttentionResult r = attention_step(dec, states, coverage ? &cov : nullptr, ap);
        std::vector<double> attn_ref, hstar_ref;
        attention_oracle(dec, states, coverage ? &cov : nullptr, ap, attn_ref, hstar_ref);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            REQUIRE(std::abs(r.attn[i] - attn_ref[i]) <= 1e-12);
            total += r.attn[i];
        }
        REQUIRE(std::abs(total - 1.0) <= 1e-12);
        for (std::size_t j = 0; j < 2 * H; ++j) REQUIRE(std::abs(r.h_star[j] - hstar_ref[j]) <= 1e-12);
    }
}

TEST_CASE("attention rejects coverage mismatches") {
    Rng rng(2);
    auto s = rng.stream("attn-err");
    AttentionParams ap = random_attention(2, 4, 2, true, s);
    Tensor2 states(3, 4);
    Tensor1 dec(2), cov_short(2);
    REQUIRE_THROWS_AS(attention_step(dec, states, &cov_short, ap), Error);
    REQUIRE_THROWS_AS(attention_step(dec, states, nullptr, ap), Error);
    AttentionParams ap2 = random_attention(2, 4, 2, false, s);
    Tensor1 cov(3);
    REQUIRE_THROWS_AS(attention_step(dec, states, &cov, ap2), Error);
    REQUIRE_THROWS_AS(attention_step(dec, Tensor2(), nullptr, ap2), ValueError);
}

TEST_CASE("pgen_switch spec points") {
    ModelDims dims{10, 3, 2, 2};
    ModelParams p = make_model_shell(dims, false);
    Tensor1 h_star(4), s(2), x(3);

    REQUIRE(pgen_switch(h_star, s, x, p) == 0.5);

    p.beta_ptr = 100.0;
    REQUIRE(std::abs(pgen_switch(h_star, s, x, p) - 1.0) <= 1e-12);
    REQUIRE(pgen_switch(h_star, s, x, p) < 1.0);  // strictly inside (0,1)

    p.beta_ptr = 0.0;
    p.delta_x[0] = 1.0;
    x[0] = 2.0;
    REQUIRE(std::abs(pgen_switch(h_star, s, x, p) - 0.8807970779778823) <= 1e-12);

    p.beta_ptr = -1e6;
    x[0] = 0.0;
    p.delta_x[0] = 0.0;
    double lo = pgen_switch(h_star, s, x, p);
    REQUIRE(lo > 0.0);

    REQUIRE_THROWS_AS(pgen_switch(Tensor1(3), s, x, p), DimensionError);
}

TEST_CASE("copy_distribution pools attention by token type") {
    Vocabulary v = Vocabulary::from_tokens({"a", "b"});
    SourceIndex src = index_source({"a", "b", "a"}, v);

    auto by_token = copy_mass_by_token(Tensor1{0.5, 0.3, 0.2}, src);
    REQUIRE(std::abs(by_token["a"] - 0.7) <= 1e-15);
    REQUIRE(std::abs(by_token["b"] - 0.3) <= 1e-15);
    REQUIRE(by_token.size() == 2);

    Tensor1 dense = copy_distribution(Tensor1{0.5, 0.3, 0.2}, src);
    REQUIRE(dense.size() == src.extended_size());
    REQUIRE(std::abs(dense[static_cast<std::size_t>(v.id("a"))] - 0.7) <= 1e-15);
    REQUIRE(std::abs(dense[static_cast<std::size_t>(v.id("b"))] - 0.3) <= 1e-15);

    // one-hot attention -> one-hot distribution
    Tensor1 onehot = copy_distribution(Tensor1{0.0, 1.0, 0.0}, src);
    REQUIRE(onehot[static_cast<std::size_t>(v.id("b"))] == 1.0);
    REQUIRE(onehot.sum() == 1.0);

    // uniform over n distinct tokens -> 1/n each
    SourceIndex src3 = index_source({"a", "b", "zz"}, v);
    Tensor1 uni = copy_distribution(Tensor1{1.0 / 3, 1.0 / 3, 1.0 / 3}, src3);
    for (std::size_t i = 0; i < 3; ++i) {
        double want = 1.0 / 3;
        std::size_t id = i == 0 ? v.id("a") : (i == 1 ? v.id("b") : src3.extended_size() - 1);
        REQUIRE(std::abs(uni[id] - want) <= 1e-15);
    }

    // mass equality is exact, not approximate
    Tensor1 attn{0.25, 0.5, 0.125};
    Tensor1 d = copy_distribution(attn, src);
    REQUIRE(d.sum() == attn.sum());

    REQUIRE_THROWS_AS(copy_distribution(Tensor1{1.0}, src), DimensionError);
}

TEST_CASE("final_distribution endpoints and arithmetic") {
    Vocabulary v = Vocabulary::from_tokens({"a", "b"});
    SourceIndex src = index_source({"a", "zz"}, v);
    const std::size_t V = v.size();

    Tensor1 p_vocab(V);
    p_vocab.fill(1.0 / static_cast<double>(V));
    Tensor1 p_copy = copy_distribution(Tensor1{0.4, 0.6}, src);

    ExtendedDistribution at1 = final_distribution(1.0, p_vocab, p_copy, V);
    at1.validate(1e-9);
    REQUIRE(at1.probs[V] == 0.0);  // source-only token gets nothing
    for (std::size_t w = 0; w < V; ++w) REQUIRE(at1.probs[w] == p_vocab[w]);

    ExtendedDistribution at0 = final_distribution(0.0, p_vocab, p_copy, V);
    for (std::size_t w = 0; w < p_copy.size(); ++w) REQUIRE(at0.probs[w] == p_copy[w]);

    // p_gen = 0.5, P_vocab(w) = 0.2, P_copy(w) = 0.6 -> 0.4
    Tensor1 pv{0.2, 0.2, 0.2, 0.2, 0.1, 0.1};
    Tensor1 pc(7);
    pc[0] = 0.6;
    pc[6] = 0.4;
    ExtendedDistribution mixed = final_distribution(0.5, pv, pc, 6);
    REQUIRE(std::abs(mixed.probs[0] - 0.4) <= 1e-15);

    // vocab token absent from source: generation mass only
    int b = v.id("b");
    REQUIRE(std::abs(at1.probs[static_cast<std::size_t>(b)] - p_vocab[static_cast<std::size_t>(b)]) <= 1e-15);
    ExtendedDistribution half = final_distribution(0.5, p_vocab, p_copy, V);
    REQUIRE(std::abs(half.probs[static_cast<std::size_t>(b)] - 0.5 * p_vocab[static_cast<std::size_t>(b)]) <= 1e-15);

    Tensor1 bad = p_vocab;
    bad[0] += 0.1;
    REQUIRE_THROWS_AS(final_distribution(0.5, bad, p_copy, V), ValueError);
    REQUIRE_THROWS_AS(final_distribution(1.5, p_vocab, p_copy, V), ValueError);
}

TEST_CASE("mixture preserves normalization on 1k fuzzed inputs") {
    Rng rng(77);
    auto s = rng.stream("mixture-fuzz");
    double worst = 0.0;
    for (int it = 0; it < 1000; ++it) {
        std::size_t V = 2 + s.index(40);
        std::size_t extra = s.index(10);
        Tensor1 pv(V), pc(V + extra);
        for (std::size_t i = 0; i < pv.size(); ++i) pv[i] = s.uniform01() + 1e-9;
        for (std::size_t i = 0; i < pc.size(); ++i) pc[i] = s.uniform01() + 1e-9;
        double sv = pv.sum(), sc = pc.sum();
        for (std::size_t i = 0; i < pv.size(); ++i) pv[i] /= sv;
        for (std::size_t i = 0; i < pc.size(); ++i) pc[i] /= sc;
        ExtendedDistribution d = final_distribution(s.uniform01(), pv, pc, V);
        worst = std::max(worst, std::abs(d.probs.sum() - 1.0));
    }
    REQUIRE(worst <= 1e-9);
}

TEST_CASE("coverage_update telescopes exactly") {
    Rng rng(4);
    auto s = rng.stream("cov");
    const std::size_t n = 6;
    Tensor1 cov(n);  // step 0: zeros
    for (std::size_t i = 0; i < n; ++i) REQUIRE(cov[i] == 0.0);

    std::vector<Tensor1> history;
    for (int t = 0; t < 10; ++t) {
        Tensor1 logits(n);
        for (std::size_t i = 0; i < n; ++i) logits[i] = s.uniform(-3.0, 3.0);
        ProbVector attn = softmax(logits);
        history.push_back(attn);
        cov = coverage_update(cov, attn);
        if (t == 0)
            for (std::size_t i = 0; i < n; ++i) REQUIRE(cov[i] == history[0][i]);
        // telescoping: coverage equals the running elementwise sum, exactly
        Tensor1 manual(n);
        for (const auto& a : history) axpy(1.0, a, manual);
        for (std::size_t i = 0; i < n; ++i) REQUIRE(cov[i] == manual[i]);
        REQUIRE(std::abs(cov.sum() - static_cast<double>(t + 1)) <= 1e-9);
    }
    Tensor1 wrong(n + 1);
    REQUIRE_THROWS_AS(coverage_update(cov, wrong), DimensionError);
}

TEST_CASE("clamp_pgen spec points") {
    REQUIRE(std::abs(clamp_pgen(0.4, 0.5) - 0.7) <= 1e-15);
    for (double p : {0.0, 0.123, 0.5, 1.0}) {
        REQUIRE(clamp_pgen(p, 0.0) == p);
        REQUIRE(clamp_pgen(p, 1.0) == 1.0);
    }
    REQUIRE_THROWS_AS(clamp_pgen(-0.1, 0.5), ValueError);
    REQUIRE_THROWS_AS(clamp_pgen(0.5, 1.1), ValueError);
    // monotone in both arguments
    REQUIRE(clamp_pgen(0.6, 0.3) >= clamp_pgen(0.5, 0.3));
    REQUIRE(clamp_pgen(0.5, 0.4) >= clamp_pgen(0.5, 0.3));
}

namespace {

struct DecodeFixture {
    Vocabulary vocab;
    ModelParams params;
    SourceIndex src;
    EncodedSource enc;

    DecodeFixture(bool coverage, std::uint64_t seed) {
        vocab = testutil::make_vocab(6);
        ModelDims dims{vocab.size(), 4, 3, 3};
        params = testutil::make_random_model(dims, coverage, seed);
        src = index_source({"t0", "oov1", "t2", "t0", "oov2"}, vocab);
        enc = encode_source(src.vocab_ids, params);
    }
};

}  // namespace

TEST_CASE("decode_step with p_min = 1 puts no mass on source-only ids") {
    DecodeFixture fx(true, 3);
    DecoderState st = initial_decoder_state(fx.enc, fx.params);
    DecodeStepResult r = decode_step(fx.params, st, kStartId, fx.enc, fx.src, 1.0);
    r.dist.validate(1e-9);
    for (std::size_t w = fx.vocab.size(); w < r.dist.size(); ++w) REQUIRE(r.dist.probs[w] == 0.0);
    REQUIRE(r.info.p_gen == 1.0);
}

TEST_CASE("decode_step with p_min = 0 equals the unmodified mixture bit-for-bit") {
    DecodeFixture fx(false, 5);
    DecoderState st = initial_decoder_state(fx.enc, fx.params);
    DecodeStepResult r = decode_step(fx.params, st, kStartId, fx.enc, fx.src, 0.0);
    REQUIRE(r.info.p_gen == r.info.p_gen_raw);
    ExtendedDistribution manual =
        final_distribution(r.info.p_gen_raw, r.info.p_vocab, r.info.p_copy, fx.vocab.size());
    REQUIRE(manual.size() == r.dist.size());
    for (std::size_t w = 0; w < manual.size(); ++w) REQUIRE(manual.probs[w] == r.dist.probs[w]);
}

TEST_CASE("decode_step matches a composition of the component operations") {
    DecodeFixture fx(true, 7);
    const double p_min = 0.25;
    DecoderState st = initial_decoder_state(fx.enc, fx.params);

    // Walk three steps; at each, rebuild the result from the parts.
    int prev = kStartId;
    for (int t = 0; t < 3; ++t) {
        DecodeStepResult r = decode_step(fx.params, st, prev, fx.enc, fx.src, p_min);
        r.dist.validate(1e-9);

        Tensor1 x(fx.params.dims.emb_dim);
        const double* row = fx.params.embedding.row(static_cast<std::size_t>(prev));
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = row[j];
        LstmState next = lstm_step(x, st.h, st.c, fx.params.decoder);
        AttentionResult att = attention_step(next.h, fx.enc.states, &st.coverage, fx.params.attn);
        ProbVector pv = vocab_distribution(next.h, att.h_star, fx.params);
        double praw = pgen_switch(att.h_star, next.h, x, fx.params);
        double pg = clamp_pgen(praw, p_min);
        Tensor1 pc = copy_distribution(att.attn, fx.src);
        ExtendedDistribution want = final_distribution(pg, pv, pc, fx.vocab.size());

        REQUIRE(std::abs(r.info.p_gen - pg) <= 1e-15);
        for (std::size_t w = 0; w < want.size(); ++w) REQUIRE(std::abs(r.dist.probs[w] - want.probs[w]) <= 1e-12);
        for (std::size_t i = 0; i < fx.src.tokens.size(); ++i) REQUIRE(std::abs(r.info.attn[i] - att.attn[i]) <= 1e-12);

        REQUIRE(r.info.h_gen >= 0.0);
        REQUIRE(r.info.h_gen <= 1.0);
        REQUIRE(r.info.h_copy >= 0.0);
        REQUIRE(r.info.h_copy <= 1.0);

        // coverage invariant: sums to the number of steps taken
        REQUIRE(r.state.step == static_cast<std::size_t>(t + 1));
        REQUIRE(std::abs(r.state.coverage.sum() - static_cast<double>(t + 1)) <= 1e-9);
        double min_cov = 0.0;
        for (std::size_t i = 0; i < r.state.coverage.size(); ++i) min_cov = std::min(min_cov, r.state.coverage[i]);
        REQUIRE(min_cov >= 0.0);

        st = r.state;
        prev = 4 + t;  // arbitrary in-vocab ids
    }
}

TEST_CASE("decode_step embeds source-only previous tokens as UNK") {
    DecodeFixture fx(false, 11);
    DecoderState st = initial_decoder_state(fx.enc, fx.params);
    int oov_ext = static_cast<int>(fx.vocab.size());  // first source-only id
    DecodeStepResult via_oov = decode_step(fx.params, st, oov_ext, fx.enc, fx.src, 0.0);
    DecodeStepResult via_unk = decode_step(fx.params, st, kUnkId, fx.enc, fx.src, 0.0);
    for (std::size_t w = 0; w < via_oov.dist.size(); ++w)
        REQUIRE(via_oov.dist.probs[w] == via_unk.dist.probs[w]);

    REQUIRE_THROWS_AS(decode_step(fx.params, st, static_cast<int>(fx.src.extended_size()), fx.enc, fx.src, 0.0),
                      DimensionError);
}

TEST_CASE("encode_source is deterministic and shaped right") {
    DecodeFixture fx(false, 13);
    REQUIRE(fx.enc.n == 5);
    REQUIRE(fx.enc.states.rows() == 5);
    REQUIRE(fx.enc.states.cols() == 2 * fx.params.dims.hidden_dim);
    REQUIRE(fx.enc.dec_h0.size() == fx.params.dims.hidden_dim);
    EncodedSource again = encode_source(fx.src.vocab_ids, fx.params);
    for (std::size_t i = 0; i < fx.enc.states.size(); ++i)
        REQUIRE(again.states.data()[i] == fx.enc.states.data()[i]);
    REQUIRE(fx.enc.states.all_finite());
    REQUIRE_THROWS_AS(encode_source({}, fx.params), ValueError);
}
