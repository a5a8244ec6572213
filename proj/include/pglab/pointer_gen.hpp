#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "pglab/entropy.hpp"
#include "pglab/model.hpp"
#include "pglab/nn.hpp"
#include "pglab/tensor.hpp"
#include "pglab/vocab.hpp"

namespace pglab {

// ---- encoder ----

struct EncodedSource {
    std::size_t n = 0;
    Tensor2 states;  // n x 2*hidden; row i = [fwd_h_i ; bwd_h_i]
    Tensor1 dec_h0, dec_c0;
};

struct EncoderCache {
    std::vector<LstmStepCache> fwd, bwd;  // indexed by source position
    Tensor1 red_in;                       // [fwd_h_last ; bwd_h_first]
};

// Runs both encoder directions over the source and reduces their final
// states into the decoder's initial state.
inline EncodedSource encode_source(const std::vector<int>& src_vocab_ids, const ModelParams& p,
                                   EncoderCache* cache = nullptr) {
    const std::size_t n = src_vocab_ids.size();
    if (n == 0) throw ValueError("encode_source: empty source");
    const std::size_t H = p.dims.hidden_dim;
    const std::size_t E = p.dims.emb_dim;
    const std::size_t V = p.dims.vocab_size;

    EncodedSource enc;
    enc.n = n;
    enc.states = Tensor2(n, 2 * H);
    if (cache) {
        cache->fwd.resize(n);
        cache->bwd.resize(n);
    }

    auto embed = [&](int id) {
        require(id >= 0 && static_cast<std::size_t>(id) < V, "encode_source: token id out of vocab range");
        Tensor1 x(E);
        const double* row = p.embedding.row(static_cast<std::size_t>(id));
        for (std::size_t j = 0; j < E; ++j) x[j] = row[j];
        return x;
    };

    LstmState st{Tensor1(H), Tensor1(H)};
    for (std::size_t i = 0; i < n; ++i) {
        Tensor1 x = embed(src_vocab_ids[i]);
        st = lstm_step(x, st.h, st.c, p.enc_fwd, cache ? &cache->fwd[i] : nullptr);
        for (std::size_t j = 0; j < H; ++j) enc.states(i, j) = st.h[j];
    }
    Tensor1 fwd_last = st.h;

    st = LstmState{Tensor1(H), Tensor1(H)};
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t i = n - 1 - k;
        Tensor1 x = embed(src_vocab_ids[i]);
        st = lstm_step(x, st.h, st.c, p.enc_bwd, cache ? &cache->bwd[i] : nullptr);
        for (std::size_t j = 0; j < H; ++j) enc.states(i, H + j) = st.h[j];
    }
    Tensor1 bwd_last = st.h;

    Tensor1 red_in = concat(fwd_last, bwd_last);
    enc.dec_h0 = matvec(p.reduce_h_w, red_in);
    axpy(1.0, p.reduce_h_b, enc.dec_h0);
    enc.dec_c0 = matvec(p.reduce_c_w, red_in);
    axpy(1.0, p.reduce_c_b, enc.dec_c0);
    for (std::size_t j = 0; j < H; ++j) {
        enc.dec_h0[j] = std::tanh(enc.dec_h0[j]);
        enc.dec_c0[j] = std::tanh(enc.dec_c0[j]);
    }
    if (cache) cache->red_in = red_in;
    return enc;
}

// ---- attention ----

struct AttentionResult {
    ProbVector attn;  // over source positions, sums to 1
    Tensor1 h_star;   // attention-weighted sum of encoder states, 2*hidden
};

struct AttnCache {
    Tensor1 s;        // decoder state fed in
    Tensor1 cov;      // coverage fed in (empty when disabled)
    Tensor2 tanh_t;   // n x attn_dim, tanh of the score pre-activations
    ProbVector attn;
    Tensor1 h_star;
};

// Additive attention; when a coverage vector is supplied the running
// attention total enters each position's score.
inline AttentionResult attention_step(const Tensor1& dec_state, const Tensor2& encoder_states,
                                      const Tensor1* coverage, const AttentionParams& ap,
                                      AttnCache* cache = nullptr) {
    const std::size_t n = encoder_states.rows();
    if (n == 0) throw ValueError("attention_step: no encoder states");
    const std::size_t A = ap.score_v.size();
    require(ap.w_dec.cols() == dec_state.size(), "attention_step: decoder state size");
    require(ap.w_enc.cols() == encoder_states.cols(), "attention_step: encoder state size");
    if (coverage) {
        require(ap.has_coverage(), "attention_step: coverage given but model has no coverage weight");
        require(coverage->size() == n, "attention_step: coverage length");
    } else {
        require(!ap.has_coverage(), "attention_step: model built with coverage needs a coverage vector");
    }

    Tensor1 dec_part = matvec(ap.w_dec, dec_state);
    axpy(1.0, ap.bias, dec_part);

    Tensor1 scores(n);
    Tensor2 tanh_t(n, A);
    Tensor1 hrow(encoder_states.cols());
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = encoder_states.row(i);
        for (std::size_t j = 0; j < hrow.size(); ++j) hrow[j] = row[j];
        Tensor1 pre = matvec(ap.w_enc, hrow);
        axpy(1.0, dec_part, pre);
        if (coverage) axpy((*coverage)[i], ap.w_cov, pre);
        double e = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
            double t = std::tanh(pre[a]);
            tanh_t(i, a) = t;
            e += ap.score_v[a] * t;
        }
        scores[i] = e;
    }

    AttentionResult out;
    out.attn = softmax(scores);
    out.h_star = Tensor1(encoder_states.cols());
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = encoder_states.row(i);
        for (std::size_t j = 0; j < out.h_star.size(); ++j) out.h_star[j] += out.attn[i] * row[j];
    }
    if (cache) {
        cache->s = dec_state;
        cache->cov = coverage ? *coverage : Tensor1();
        cache->tanh_t = std::move(tanh_t);
        cache->attn = out.attn;
        cache->h_star = out.h_star;
    }
    return out;
}

// ---- switch, copy and mixture distributions ----

// Sigmoid switch between generating and copying. The result is pinned
// strictly inside (0,1) so downstream logs never blow up.
inline double pgen_switch(const Tensor1& h_star, const Tensor1& s, const Tensor1& x, const ModelParams& p) {
    require(h_star.size() == p.delta_hstar.size(), "pgen_switch: h_star size");
    require(s.size() == p.delta_s.size(), "pgen_switch: s size");
    require(x.size() == p.delta_x.size(), "pgen_switch: x size");
    double z = dot(p.delta_hstar, h_star) + dot(p.delta_s, s) + dot(p.delta_x, x) + p.beta_ptr;
    double v = sigmoid(z);
    const double hi = std::nextafter(1.0, 0.0);
    if (v < 1e-300) v = 1e-300;
    if (v > hi) v = hi;
    return v;
}

// Mixing-floor intervention: squeezes the switch into [p_min, 1].
inline double clamp_pgen(double p_gen, double p_min) {
    if (!(p_min >= 0.0 && p_min <= 1.0)) throw ValueError("clamp_pgen: p_min outside [0,1]");
    if (!(p_gen >= 0.0 && p_gen <= 1.0)) throw ValueError("clamp_pgen: p_gen outside [0,1]");
    return p_min + (1.0 - p_min) * p_gen;
}

// Attention mass pooled by extended token id. Repeated source tokens add up,
// so this is a distribution over the distinct token types of the source.
inline Tensor1 copy_distribution(const ProbVector& attn, const SourceIndex& src) {
    require(attn.size() == src.tokens.size(), "copy_distribution: attention length != source length");
    Tensor1 out(src.extended_size());
    for (std::size_t i = 0; i < attn.size(); ++i) {
        if (attn[i] < 0.0) throw ValueError("copy_distribution: negative attention weight");
        out[static_cast<std::size_t>(src.extended_ids[i])] += attn[i];
    }
    return out;
}

inline std::unordered_map<std::string, double> copy_mass_by_token(const ProbVector& attn, const SourceIndex& src) {
    require(attn.size() == src.tokens.size(), "copy_mass_by_token: attention length != source length");
    std::unordered_map<std::string, double> out;
    for (std::size_t i = 0; i < attn.size(); ++i) out[src.tokens[i]] += attn[i];
    return out;
}

struct ExtendedDistribution {
    Tensor1 probs;               // over vocab ids then source-only ids
    std::size_t vocab_size = 0;  // ids >= vocab_size are copy-only

    std::size_t size() const { return probs.size(); }
    void validate(double tol = 1e-6) const {
        require(probs.size() >= vocab_size, "ExtendedDistribution: shorter than vocab");
        double total = 0.0;
        for (double v : probs.values()) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw ValueError("ExtendedDistribution: bad probability");
            total += v;
        }
        if (std::abs(total - 1.0) > tol) throw ValueError("ExtendedDistribution: mass " + std::to_string(total));
    }
};

// P(w) = p_gen P_vocab(w) + (1 - p_gen) P_copy(w) over the extended vocab.
inline ExtendedDistribution final_distribution(double p_gen, const ProbVector& p_vocab, const Tensor1& p_copy,
                                               std::size_t vocab_size) {
    if (!(p_gen >= 0.0 && p_gen <= 1.0)) throw ValueError("final_distribution: p_gen outside [0,1]");
    require(p_vocab.size() == vocab_size, "final_distribution: vocab distribution size");
    require(p_copy.size() >= vocab_size, "final_distribution: copy distribution shorter than vocab");
    double sv = p_vocab.sum(), sc = p_copy.sum();
    if (std::abs(sv - 1.0) > 1e-6) throw ValueError("final_distribution: vocab mass " + std::to_string(sv));
    if (std::abs(sc - 1.0) > 1e-6) throw ValueError("final_distribution: copy mass " + std::to_string(sc));

    ExtendedDistribution out;
    out.vocab_size = vocab_size;
    out.probs = Tensor1(p_copy.size());
    for (std::size_t w = 0; w < vocab_size; ++w) out.probs[w] = p_gen * p_vocab[w];
    for (std::size_t w = 0; w < p_copy.size(); ++w) out.probs[w] += (1.0 - p_gen) * p_copy[w];
    return out;
}

inline Tensor1 coverage_update(const Tensor1& coverage, const ProbVector& attn) {
    require(coverage.size() == attn.size(), "coverage_update: length mismatch");
    Tensor1 out = coverage;
    axpy(1.0, attn, out);
    return out;
}

// ---- vocab head ----

struct VocabCache {
    Tensor1 concat;   // [s ; h_star]
    Tensor1 mid_out;  // tanh output, two-layer head only
    ProbVector p_vocab;
};

inline ProbVector vocab_distribution(const Tensor1& s, const Tensor1& h_star, const ModelParams& p,
                                     VocabCache* cache = nullptr) {
    Tensor1 in = concat(s, h_star);
    Tensor1 mid_out;
    Tensor1 logits;
    if (p.two_layer_vocab) {
        Tensor1 mid = matvec(p.vocab_mid_w, in);
        axpy(1.0, p.vocab_mid_b, mid);
        for (std::size_t i = 0; i < mid.size(); ++i) mid[i] = std::tanh(mid[i]);
        mid_out = mid;
        logits = matvec(p.vocab_w, mid);
    } else {
        logits = matvec(p.vocab_w, in);
    }
    axpy(1.0, p.vocab_b, logits);
    ProbVector pv = softmax(logits);
    if (cache) {
        cache->concat = std::move(in);
        cache->mid_out = std::move(mid_out);
        cache->p_vocab = pv;
    }
    return pv;
}

// ---- one decoder step ----

struct DecoderState {
    Tensor1 h, c;
    Tensor1 coverage;      // empty when the model runs without coverage
    std::size_t step = 0;  // decoder steps taken so far
};

inline DecoderState initial_decoder_state(const EncodedSource& enc, const ModelParams& p) {
    DecoderState st;
    st.h = enc.dec_h0;
    st.c = enc.dec_c0;
    if (p.coverage) st.coverage = Tensor1(enc.n);
    return st;
}

struct StepInfo {
    double p_gen_raw = 0.0;  // switch output before any floor
    double p_gen = 0.0;      // after the p_min intervention
    double h_gen = 0.0;      // normalized entropy of the vocab distribution
    double h_copy = 0.0;     // normalized entropy of copy mass over source types
    ProbVector attn;
    ProbVector p_vocab;
    Tensor1 p_copy;
    Tensor1 h_star;
};

struct StepCache {
    int emb_id = -1;  // embedding row used for the input token
    LstmStepCache lstm;
    AttnCache attn;
    VocabCache vocab;
    double p_raw = 0.0;
    Tensor1 coverage_in;  // coverage the attention saw (empty when disabled)
};

struct DecodeStepResult {
    ExtendedDistribution dist;
    DecoderState state;
    StepInfo info;
};

// Advances the decoder one token: consume the previous token's embedding,
// attend (with the coverage accumulated so far), mix vocab and copy
// distributions, then fold this step's attention into coverage.
inline DecodeStepResult decode_step(const ModelParams& p, const DecoderState& st, int prev_extended_id,
                                    const EncodedSource& enc, const SourceIndex& src, double p_min,
                                    StepCache* cache = nullptr) {
    const std::size_t V = p.dims.vocab_size;
    const std::size_t E = p.dims.emb_dim;
    require(prev_extended_id >= 0 && static_cast<std::size_t>(prev_extended_id) < src.extended_size(),
            "decode_step: previous token id outside extended vocab");
    require(src.vocab_size == V, "decode_step: source indexed against a different vocab");
    require(enc.n == src.tokens.size(), "decode_step: encoder/source length mismatch");

    // Source-only tokens have no embedding row; they enter as <unk>.
    int emb_id = prev_extended_id < static_cast<int>(V) ? prev_extended_id : kUnkId;
    Tensor1 x(E);
    const double* row = p.embedding.row(static_cast<std::size_t>(emb_id));
    for (std::size_t j = 0; j < E; ++j) x[j] = row[j];

    LstmState next = lstm_step(x, st.h, st.c, p.decoder, cache ? &cache->lstm : nullptr);

    const Tensor1* cov = p.coverage ? &st.coverage : nullptr;
    AttentionResult att = attention_step(next.h, enc.states, cov, p.attn, cache ? &cache->attn : nullptr);

    ProbVector p_vocab = vocab_distribution(next.h, att.h_star, p, cache ? &cache->vocab : nullptr);

    double p_raw = pgen_switch(att.h_star, next.h, x, p);
    double p_gen = clamp_pgen(p_raw, p_min);

    Tensor1 p_copy = copy_distribution(att.attn, src);

    DecodeStepResult out;
    out.dist = final_distribution(p_gen, p_vocab, p_copy, V);
    out.state.h = next.h;
    out.state.c = next.c;
    out.state.step = st.step + 1;
    if (p.coverage) out.state.coverage = coverage_update(st.coverage, att.attn);

    out.info.p_gen_raw = p_raw;
    out.info.p_gen = p_gen;
    out.info.h_gen = normalized_entropy(p_vocab, V);
    out.info.h_copy = src.distinct_types >= 2 ? normalized_entropy(p_copy, src.distinct_types) : 0.0;
    out.info.attn = att.attn;
    out.info.p_vocab = std::move(p_vocab);
    out.info.p_copy = std::move(p_copy);
    out.info.h_star = att.h_star;

    if (cache) {
        cache->emb_id = emb_id;
        cache->p_raw = p_raw;
        cache->coverage_in = p.coverage ? st.coverage : Tensor1();
    }
    return out;
}

}  // namespace pglab
