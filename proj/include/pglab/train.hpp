#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "pglab/corpus.hpp"
#include "pglab/decode.hpp"
#include "pglab/pointer_gen.hpp"

namespace pglab {

enum class Optimizer { kSgd, kAdagrad };

struct TrainConfig {
    std::size_t emb_dim = 32;
    std::size_t hidden_dim = 32;
    std::size_t attn_dim = 32;
    double learning_rate = 0.1;
    Optimizer optimizer = Optimizer::kSgd;
    std::size_t batch_size = 8;
    std::size_t steps = 1000;
    bool coverage_enabled = false;
    bool two_layer_vocab = false;
    double clip_norm = 2.0;             // global-norm gradient clip; <= 0 disables
    double coverage_loss_weight = 0.0;  // adds sum_t sum_i min(a, cov) when > 0
    std::uint64_t seed = 0;

    void validate() const {
        if (emb_dim < 1 || hidden_dim < 1 || attn_dim < 1) throw ValueError("TrainConfig: dims must be positive");
        if (steps < 1) throw ValueError("TrainConfig: steps must be positive");
        if (batch_size < 1) throw ValueError("TrainConfig: batch size must be positive");
        if (!(learning_rate >= 0.0)) throw ValueError("TrainConfig: bad learning rate");
        if (coverage_loss_weight < 0.0) throw ValueError("TrainConfig: bad coverage loss weight");
        if (coverage_loss_weight > 0.0 && !coverage_enabled)
            throw ValueError("TrainConfig: coverage loss needs coverage enabled");
    }
};

// Mean negative log-likelihood, in nats, of the target ids under a
// step-aligned sequence of extended distributions.
inline double nll_loss(const std::vector<ExtendedDistribution>& dists, const std::vector<int>& target_ids) {
    require(dists.size() == target_ids.size(), "nll_loss: sequence lengths differ");
    if (dists.empty()) throw ValueError("nll_loss: empty sequence");
    double total = 0.0;
    for (std::size_t t = 0; t < dists.size(); ++t) {
        const int id = target_ids[t];
        if (id < 0 || static_cast<std::size_t>(id) >= dists[t].size())
            throw ValueError("nll_loss: target id out of range at step " + std::to_string(t));
        const double p = dists[t].probs[static_cast<std::size_t>(id)];
        if (!(p > 0.0)) throw ValueError("nll_loss: zero-probability target at step " + std::to_string(t));
        total -= std::log(p);
    }
    return total / static_cast<double>(dists.size());
}

// Maps target tokens to extended ids against one source. Unrepresentable
// tokens (outside both vocab and source) are reported with their step.
inline std::vector<int> target_extended_ids(const std::vector<std::string>& target, const Vocabulary& vocab,
                                            const SourceIndex& src) {
    std::vector<int> out;
    out.reserve(target.size());
    for (std::size_t t = 0; t < target.size(); ++t) {
        const std::string& tok = target[t];
        if (vocab.contains(tok)) {
            out.push_back(vocab.id(tok));
            continue;
        }
        int ext = -1;
        for (std::size_t k = 0; k < src.oov_types.size(); ++k) {
            if (src.oov_types[k] == tok) {
                ext = static_cast<int>(src.vocab_size + k);
                break;
            }
        }
        if (ext < 0)
            throw ValueError("zero-probability target at step " + std::to_string(t) + ": '" + tok +
                             "' is outside both the vocabulary and the source");
        out.push_back(ext);
    }
    return out;
}

namespace detail {

// d_logits for y = softmax(logits) given dL/dy.
inline Tensor1 softmax_backward(const ProbVector& y, const Tensor1& d_y) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += d_y[i] * y[i];
    Tensor1 d_logits(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) d_logits[i] = y[i] * (d_y[i] - s);
    return d_logits;
}

}  // namespace detail

// Teacher-forced loss of one example: mean NLL over target steps plus STOP,
// with the optional coverage penalty. No p_min at training time.
inline double example_loss(const ModelParams& params, const Vocabulary& vocab, const TrainExample& ex,
                           double coverage_loss_weight = 0.0) {
    require(coverage_loss_weight == 0.0 || params.coverage, "example_loss: coverage loss without coverage");
    const SourceIndex src = index_source(ex.source, vocab);
    std::vector<int> targets = target_extended_ids(ex.target, vocab, src);
    targets.push_back(kStopId);
    const EncodedSource enc = encode_source(src.vocab_ids, params);
    DecoderState st = initial_decoder_state(enc, params);
    const double T = static_cast<double>(targets.size());

    double total = 0.0;
    int prev = kStartId;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        DecodeStepResult r = decode_step(params, st, prev, enc, src, 0.0);
        const double p = r.dist.probs[static_cast<std::size_t>(targets[t])];
        if (!(p > 0.0)) throw ValueError("zero-probability target at step " + std::to_string(t));
        total -= std::log(p);
        if (coverage_loss_weight > 0.0) {
            for (std::size_t i = 0; i < src.tokens.size(); ++i)
                total += coverage_loss_weight * std::min(r.info.attn[i], st.coverage[i]);
        }
        st = r.state;
        prev = targets[t];
    }
    return total / T;
}

// Same loss with a full hand-written backward pass; parameter gradients
// accumulate into `grads` (scaled by 1, caller averages over the batch).
inline double example_loss_and_grads(const ModelParams& params, const Vocabulary& vocab, const TrainExample& ex,
                                     ModelParams& grads, double coverage_loss_weight = 0.0) {
    require(coverage_loss_weight == 0.0 || params.coverage,
            "example_loss_and_grads: coverage loss without coverage");
    const std::size_t V = params.dims.vocab_size;
    const std::size_t H = params.dims.hidden_dim;
    const SourceIndex src = index_source(ex.source, vocab);
    std::vector<int> targets = target_extended_ids(ex.target, vocab, src);
    targets.push_back(kStopId);
    const std::size_t T = targets.size();
    const std::size_t n = src.tokens.size();
    const double invT = 1.0 / static_cast<double>(T);

    // ---- forward, caching everything ----
    EncoderCache ec;
    const EncodedSource enc = encode_source(src.vocab_ids, params, &ec);
    std::vector<StepCache> caches(T);
    std::vector<DecodeStepResult> results(T);
    DecoderState st = initial_decoder_state(enc, params);
    double total = 0.0;
    int prev = kStartId;
    for (std::size_t t = 0; t < T; ++t) {
        results[t] = decode_step(params, st, prev, enc, src, 0.0, &caches[t]);
        const double p = results[t].dist.probs[static_cast<std::size_t>(targets[t])];
        if (!(p > 0.0)) throw ValueError("zero-probability target at step " + std::to_string(t));
        total -= std::log(p);
        if (coverage_loss_weight > 0.0) {
            for (std::size_t i = 0; i < n; ++i)
                total += coverage_loss_weight * std::min(results[t].info.attn[i], st.coverage[i]);
        }
        st = results[t].state;
        prev = targets[t];
    }
    const double loss = total * invT;

    // ---- backward ----
    Tensor2 d_states(n, 2 * H);      // grad into encoder states, filled over all steps
    Tensor1 d_h_next(H), d_c_next(H);
    Tensor1 d_cov_next;              // dL/d coverage_{t+1}, complete when step t runs
    if (params.coverage) d_cov_next = Tensor1(n);

    for (std::size_t ri = T; ri-- > 0;) {
        const StepCache& sc = caches[ri];
        const StepInfo& info = results[ri].info;
        const int target = targets[ri];
        const double p_target = results[ri].dist.probs[static_cast<std::size_t>(target)];
        const double g = -invT / p_target;  // dL/dP_final[target]
        const double pg = info.p_gen_raw;   // training never applies p_min

        // mixture: P[w] = pg*Pv[w] (w<V) + (1-pg)*Pc[w]
        double d_pg = -g * info.p_copy[static_cast<std::size_t>(target)];
        if (target < static_cast<int>(V)) d_pg += g * info.p_vocab[static_cast<std::size_t>(target)];

        Tensor1 d_h(H);       // into decoder hidden h_t
        Tensor1 d_h_star(2 * H);
        Tensor1 d_x(params.dims.emb_dim);

        // switch backward through the sigmoid
        const double d_z = d_pg * pg * (1.0 - pg);
        axpy(d_z, params.delta_hstar, d_h_star);
        for (std::size_t i = 0; i < 2 * H; ++i) grads.delta_hstar[i] += d_z * info.h_star[i];
        for (std::size_t i = 0; i < H; ++i) {
            grads.delta_s[i] += d_z * sc.attn.s[i];
            d_h[i] += d_z * params.delta_s[i];
        }
        for (std::size_t i = 0; i < params.dims.emb_dim; ++i) {
            grads.delta_x[i] += d_z * sc.lstm.x[i];
            d_x[i] += d_z * params.delta_x[i];
        }
        grads.beta_ptr += d_z;

        // vocab head backward (only when the target draws generation mass)
        if (target < static_cast<int>(V)) {
            Tensor1 d_pv(V);
            d_pv[static_cast<std::size_t>(target)] = g * pg;
            Tensor1 d_logits = detail::softmax_backward(sc.vocab.p_vocab, d_pv);
            Tensor1 d_in;
            if (params.two_layer_vocab) {
                outer_add(grads.vocab_w, d_logits, sc.vocab.mid_out);
                axpy(1.0, d_logits, grads.vocab_b);
                Tensor1 d_mid = matvec_transpose(params.vocab_w, d_logits);
                for (std::size_t i = 0; i < d_mid.size(); ++i)
                    d_mid[i] *= 1.0 - sc.vocab.mid_out[i] * sc.vocab.mid_out[i];
                outer_add(grads.vocab_mid_w, d_mid, sc.vocab.concat);
                axpy(1.0, d_mid, grads.vocab_mid_b);
                d_in = matvec_transpose(params.vocab_mid_w, d_mid);
            } else {
                outer_add(grads.vocab_w, d_logits, sc.vocab.concat);
                axpy(1.0, d_logits, grads.vocab_b);
                d_in = matvec_transpose(params.vocab_w, d_logits);
            }
            for (std::size_t i = 0; i < H; ++i) d_h[i] += d_in[i];
            for (std::size_t i = 0; i < 2 * H; ++i) d_h_star[i] += d_in[H + i];
        }

        // attention gradient assembly: copy mass, h_star path, coverage
        // recurrence, optional coverage penalty
        Tensor1 d_attn(n);
        const double d_pc_target = g * (1.0 - pg);
        for (std::size_t i = 0; i < n; ++i) {
            if (src.extended_ids[i] == target) d_attn[i] += d_pc_target;
            const double* hrow = enc.states.row(i);
            double acc = 0.0;
            for (std::size_t j = 0; j < 2 * H; ++j) acc += d_h_star[j] * hrow[j];
            d_attn[i] += acc;
            // a_t feeds coverage_{t+1}
            if (params.coverage) d_attn[i] += d_cov_next[i];
        }
        Tensor1 d_cov_direct;  // dL/d cov_t outside the score path
        if (params.coverage) {
            d_cov_direct = d_cov_next;  // cov_{t+1} = cov_t + a_t
            if (coverage_loss_weight > 0.0) {
                const double w = coverage_loss_weight * invT;
                for (std::size_t i = 0; i < n; ++i) {
                    if (info.attn[i] < sc.coverage_in[i])
                        d_attn[i] += w;
                    else
                        d_cov_direct[i] += w;
                }
            }
        }

        // h_star = sum_i a_i h_i: states share
        for (std::size_t i = 0; i < n; ++i) {
            double* drow = d_states.row(i);
            const double a = info.attn[i];
            for (std::size_t j = 0; j < 2 * H; ++j) drow[j] += a * d_h_star[j];
        }

        // softmax and additive score backward
        Tensor1 d_e = detail::softmax_backward(info.attn, d_attn);
        const std::size_t A = params.attn.score_v.size();
        Tensor1 d_pre_sum(A);
        Tensor1 hrow_v(2 * H);
        for (std::size_t i = 0; i < n; ++i) {
            Tensor1 d_pre(A);
            for (std::size_t a = 0; a < A; ++a) {
                const double th = sc.attn.tanh_t(i, a);
                grads.attn.score_v[a] += d_e[i] * th;
                d_pre[a] = d_e[i] * params.attn.score_v[a] * (1.0 - th * th);
            }
            const double* hrow = enc.states.row(i);
            for (std::size_t j = 0; j < 2 * H; ++j) hrow_v[j] = hrow[j];
            outer_add(grads.attn.w_enc, d_pre, hrow_v);
            Tensor1 back = matvec_transpose(params.attn.w_enc, d_pre);
            double* drow = d_states.row(i);
            for (std::size_t j = 0; j < 2 * H; ++j) drow[j] += back[j];
            if (params.coverage) {
                const double cv = sc.coverage_in[i];
                for (std::size_t a = 0; a < A; ++a) grads.attn.w_cov[a] += d_pre[a] * cv;
                d_cov_direct[i] += dot(params.attn.w_cov, d_pre);
            }
            axpy(1.0, d_pre, d_pre_sum);
        }
        outer_add(grads.attn.w_dec, d_pre_sum, sc.attn.s);
        axpy(1.0, d_pre_sum, grads.attn.bias);
        Tensor1 d_s_att = matvec_transpose(params.attn.w_dec, d_pre_sum);
        axpy(1.0, d_s_att, d_h);

        if (params.coverage) d_cov_next = std::move(d_cov_direct);

        // decoder cell
        axpy(1.0, d_h_next, d_h);
        LstmStepGrads lg = lstm_step_backward(d_h, d_c_next, sc.lstm, params.decoder, grads.decoder);
        axpy(1.0, lg.d_x, d_x);
        double* erow = grads.embedding.row(static_cast<std::size_t>(sc.emb_id));
        for (std::size_t i = 0; i < params.dims.emb_dim; ++i) erow[i] += d_x[i];
        d_h_next = std::move(lg.d_h_prev);
        d_c_next = std::move(lg.d_c_prev);
    }

    // reduce layer: dec_h0 = tanh(W [fwd_last; bwd_last] + b)
    Tensor1 d_red_in(2 * H);
    {
        Tensor1 d_pre_h(H), d_pre_c(H);
        for (std::size_t i = 0; i < H; ++i) {
            d_pre_h[i] = d_h_next[i] * (1.0 - enc.dec_h0[i] * enc.dec_h0[i]);
            d_pre_c[i] = d_c_next[i] * (1.0 - enc.dec_c0[i] * enc.dec_c0[i]);
        }
        outer_add(grads.reduce_h_w, d_pre_h, ec.red_in);
        axpy(1.0, d_pre_h, grads.reduce_h_b);
        outer_add(grads.reduce_c_w, d_pre_c, ec.red_in);
        axpy(1.0, d_pre_c, grads.reduce_c_b);
        Tensor1 back_h = matvec_transpose(params.reduce_h_w, d_pre_h);
        Tensor1 back_c = matvec_transpose(params.reduce_c_w, d_pre_c);
        for (std::size_t i = 0; i < 2 * H; ++i) d_red_in[i] = back_h[i] + back_c[i];
    }

    // forward encoder direction, reverse time
    {
        Tensor1 dh(H), dc(H);
        for (std::size_t i = 0; i < H; ++i) dh[i] = d_red_in[i];
        for (std::size_t i = n; i-- > 0;) {
            Tensor1 d_h_total = dh;
            const double* drow = d_states.row(i);
            for (std::size_t j = 0; j < H; ++j) d_h_total[j] += drow[j];
            LstmStepGrads lg = lstm_step_backward(d_h_total, dc, ec.fwd[i], params.enc_fwd, grads.enc_fwd);
            double* erow = grads.embedding.row(static_cast<std::size_t>(src.vocab_ids[i]));
            for (std::size_t j = 0; j < params.dims.emb_dim; ++j) erow[j] += lg.d_x[j];
            dh = std::move(lg.d_h_prev);
            dc = std::move(lg.d_c_prev);
        }
    }
    // backward encoder direction ran n-1..0, so its reverse-time order is 0..n-1
    {
        Tensor1 dh(H), dc(H);
        for (std::size_t i = 0; i < H; ++i) dh[i] = d_red_in[H + i];
        for (std::size_t i = 0; i < n; ++i) {
            Tensor1 d_h_total = dh;
            const double* drow = d_states.row(i);
            for (std::size_t j = 0; j < H; ++j) d_h_total[j] += drow[H + j];
            LstmStepGrads lg = lstm_step_backward(d_h_total, dc, ec.bwd[i], params.enc_bwd, grads.enc_bwd);
            double* erow = grads.embedding.row(static_cast<std::size_t>(src.vocab_ids[i]));
            for (std::size_t j = 0; j < params.dims.emb_dim; ++j) erow[j] += lg.d_x[j];
            dh = std::move(lg.d_h_prev);
            dc = std::move(lg.d_c_prev);
        }
    }
    return loss;
}

struct TrainResult {
    ModelParams params;
    Vocabulary vocab;
    std::vector<double> loss_history;  // mean batch loss per step
};

inline Vocabulary vocab_from_corpus(const Corpus& corpus) {
    Vocabulary v;
    for (const auto& ex : corpus) {
        for (const auto& t : ex.source) v.add(t);
        for (const auto& t : ex.target) v.add(t);
    }
    v.validate();
    return v;
}

inline TrainResult train_model(const Corpus& corpus, const Vocabulary& vocab, const TrainConfig& config) {
    config.validate();
    if (corpus.empty()) throw ValueError("train_model: empty corpus");

    Rng rng(config.seed);
    auto init_stream = rng.stream("model-init");
    ModelDims dims{vocab.size(), config.emb_dim, config.hidden_dim, config.attn_dim};
    ModelParams params =
        init_model_params(dims, config.coverage_enabled, init_stream, config.two_layer_vocab);

    ModelParams adagrad_acc = zero_like(params);

    TrainResult out;
    out.vocab = vocab;
    out.loss_history.reserve(config.steps);
    // Batches walk the corpus round-robin: deterministic, and a batch the
    // size of the corpus covers it exactly once per step.
    std::size_t cursor = 0;
    for (std::size_t step = 0; step < config.steps; ++step) {
        ModelParams grads = zero_like(params);
        double batch_loss = 0.0;
        for (std::size_t b = 0; b < config.batch_size; ++b) {
            const TrainExample& ex = corpus[cursor];
            cursor = (cursor + 1) % corpus.size();
            batch_loss += example_loss_and_grads(params, vocab, ex, grads, config.coverage_loss_weight);
        }
        batch_loss /= static_cast<double>(config.batch_size);
        if (!std::isfinite(batch_loss))
            throw Error("train_model: loss diverged at step " + std::to_string(step) +
                        " (loss=" + std::to_string(batch_loss) + ")");
        out.loss_history.push_back(batch_loss);

        scale_params(grads, 1.0 / static_cast<double>(config.batch_size));
        if (config.clip_norm > 0.0) {
            const double norm = global_norm(grads);
            if (norm > config.clip_norm) scale_params(grads, config.clip_norm / norm);
        }
        if (config.optimizer == Optimizer::kSgd) {
            add_scaled(params, grads, -config.learning_rate);
        } else {
            auto pv = params.tensor_refs();
            auto gv = grads.tensor_refs();
            auto av = adagrad_acc.tensor_refs();
            for (std::size_t t = 0; t < pv.size(); ++t) {
                for (std::size_t i = 0; i < pv[t].len; ++i) {
                    const double gi = gv[t].data[i];
                    av[t].data[i] += gi * gi;
                    pv[t].data[i] -= config.learning_rate * gi / (std::sqrt(av[t].data[i]) + 1e-10);
                }
            }
        }
    }
    out.params = std::move(params);
    return out;
}

inline TrainResult train_model(const Corpus& corpus, const TrainConfig& config) {
    return train_model(corpus, vocab_from_corpus(corpus), config);
}

}  // namespace pglab
