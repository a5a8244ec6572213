#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pglab/pointer_gen.hpp"

namespace pglab {

struct DecodeConfig {
    std::size_t beam_width = 4;
    std::size_t max_len = 120;
    double p_min = 0.0;
    bool coverage_enabled = false;
    std::uint64_t seed = 0;       // carried into the trace for provenance
    bool mean_logprob = false;    // score by mean instead of summed log-prob
    bool keep_all_beams = false;  // retain final beam contents in the trace

    void validate() const {
        if (beam_width < 1) throw ValueError("DecodeConfig: beam_width must be >= 1");
        if (max_len < 1) throw ValueError("DecodeConfig: max_len must be >= 1");
        if (!(p_min >= 0.0 && p_min <= 1.0)) throw ValueError("DecodeConfig: p_min outside [0,1]");
    }
};

enum class TokenOrigin { kVocab, kSourceOnly };

inline const char* to_string(TokenOrigin o) { return o == TokenOrigin::kVocab ? "vocab" : "source-only"; }

struct TokenStep {
    std::size_t step = 0;
    std::string token;
    TokenOrigin origin = TokenOrigin::kVocab;
    double p_gen = 0.0;      // after the p_min intervention
    double p_gen_raw = 0.0;  // switch output
    double h_gen = 0.0;
    double h_copy = 0.0;
    ProbVector attention;
    std::size_t copy_support = 0;  // distinct source token types
};

struct BeamEntry {
    std::string summary;
    double score = 0.0;
    bool ended_with_stop = false;
};

struct DecodeTrace {
    std::string doc_id;
    DecodeConfig config;
    std::vector<std::string> article_tokens;
    std::vector<TokenStep> steps;
    std::string summary;  // emitted tokens joined with single spaces
    double score = 0.0;   // winning hypothesis score under the configured rule
    bool ended_with_stop = false;
    std::vector<BeamEntry> beams;  // populated under keep_all_beams
};

namespace detail {

struct Hypothesis {
    std::vector<int> tokens;  // emitted extended ids; STOP only ever last
    double sum_logprob = 0.0;
    DecoderState state;
    bool done = false;
    bool stopped = false;  // done via STOP rather than truncation

    double score(bool mean) const {
        if (!mean || tokens.empty()) return sum_logprob;
        return sum_logprob / static_cast<double>(tokens.size());
    }
    int last_token() const { return tokens.empty() ? kStartId : tokens.back(); }
};

struct Candidate {
    double score = 0.0;
    int tie_token = 0;  // newly emitted token, or last token for carried hyps
    std::size_t parent = 0;
    bool carried = false;
    int token = -1;              // -1 for carried
    double logprob = 0.0;        // of the new token
    std::size_t result_ix = 0;   // index into the per-parent step results
};

inline bool candidate_before(const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.tie_token != b.tie_token) return a.tie_token < b.tie_token;
    return a.parent < b.parent;
}

}  // namespace detail

// Beam search over the pointer-generator decoder. Completed hypotheses are
// never extended; ties break toward the lower token id, then the earlier
// beam slot, so results are reproducible everywhere.
inline DecodeTrace beam_search_decode(const std::vector<std::string>& article_tokens, const Vocabulary& vocab,
                                      const ModelParams& params, const DecodeConfig& config,
                                      const std::string& doc_id = "") {
    config.validate();
    params.validate();
    if (article_tokens.empty()) throw ValueError("beam_search_decode: empty article");
    require(params.coverage == config.coverage_enabled,
            "beam_search_decode: config coverage flag disagrees with the model");

    const SourceIndex src = index_source(article_tokens, vocab);
    const EncodedSource enc = encode_source(src.vocab_ids, params);
    const std::size_t width = config.beam_width;

    std::vector<detail::Hypothesis> beam(1);
    beam[0].state = initial_decoder_state(enc, params);

    for (std::size_t step = 0; step < config.max_len; ++step) {
        bool any_active = false;
        for (const auto& h : beam) any_active |= !h.done;
        if (!any_active) break;

        std::vector<detail::Candidate> pool;
        std::vector<DecodeStepResult> results(beam.size());
        for (std::size_t b = 0; b < beam.size(); ++b) {
            const auto& hyp = beam[b];
            if (hyp.done) {
                detail::Candidate c;
                c.score = hyp.score(config.mean_logprob);
                c.tie_token = hyp.last_token();
                c.parent = b;
                c.carried = true;
                pool.push_back(c);
                continue;
            }
            results[b] = decode_step(params, hyp.state, hyp.last_token(), enc, src, config.p_min);
            const Tensor1& probs = results[b].dist.probs;

            // Top `width` tokens of this expansion, ordered (prob desc, id asc).
            std::vector<int> ids(probs.size());
            for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
            std::size_t k = std::min(width, ids.size());
            std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(),
                              [&](int x, int y) {
                                  double px = probs[static_cast<std::size_t>(x)];
                                  double py = probs[static_cast<std::size_t>(y)];
                                  if (px != py) return px > py;
                                  return x < y;
                              });
            for (std::size_t j = 0; j < k; ++j) {
                const int tok = ids[j];
                const double pr = probs[static_cast<std::size_t>(tok)];
                if (pr <= 0.0) continue;
                detail::Candidate c;
                c.logprob = std::log(pr);
                const double new_sum = hyp.sum_logprob + c.logprob;
                c.score = config.mean_logprob ? new_sum / static_cast<double>(hyp.tokens.size() + 1) : new_sum;
                c.tie_token = tok;
                c.parent = b;
                c.token = tok;
                pool.push_back(c);
            }
        }
        std::sort(pool.begin(), pool.end(), detail::candidate_before);
        if (pool.size() > width) pool.resize(width);

        std::vector<detail::Hypothesis> next;
        next.reserve(pool.size());
        for (const auto& c : pool) {
            if (c.carried) {
                next.push_back(beam[c.parent]);
                continue;
            }
            detail::Hypothesis h = beam[c.parent];
            h.tokens.push_back(c.token);
            h.sum_logprob += c.logprob;
            h.state = results[c.parent].state;
            if (c.token == kStopId) {
                h.done = true;
                h.stopped = true;
            }
            next.push_back(std::move(h));
        }
        beam = std::move(next);
    }

    // Anything still running hit max_len: truncated, flagged via stopped=false.
    for (auto& h : beam) h.done = true;

    // Each round left the beam sorted by (score, token id, slot), so the
    // front hypothesis is the winner under the documented tie-break.
    const detail::Hypothesis& win = beam.front();

    // Re-score the winning hypothesis in one clean forward pass and record
    // the per-token quantities from that pass.
    DecodeTrace trace;
    trace.doc_id = doc_id;
    trace.config = config;
    trace.article_tokens = article_tokens;
    trace.score = win.score(config.mean_logprob);
    trace.ended_with_stop = win.stopped;

    DecoderState st = initial_decoder_state(enc, params);
    int prev = kStartId;
    std::string summary;
    for (std::size_t t = 0; t < win.tokens.size(); ++t) {
        const int tok = win.tokens[t];
        DecodeStepResult r = decode_step(params, st, prev, enc, src, config.p_min);
        if (tok != kStopId) {
            TokenStep ts;
            ts.step = trace.steps.size();
            ts.token = src.token_for(vocab, tok);
            ts.origin = tok < static_cast<int>(vocab.size()) ? TokenOrigin::kVocab : TokenOrigin::kSourceOnly;
            ts.p_gen = r.info.p_gen;
            ts.p_gen_raw = r.info.p_gen_raw;
            ts.h_gen = r.info.h_gen;
            ts.h_copy = r.info.h_copy;
            ts.attention = r.info.attn;
            ts.copy_support = src.distinct_types;
            if (!summary.empty()) summary += ' ';
            summary += ts.token;
            trace.steps.push_back(std::move(ts));
        }
        st = r.state;
        prev = tok;
    }
    trace.summary = std::move(summary);

    if (config.keep_all_beams) {
        for (const auto& h : beam) {
            BeamEntry e;
            e.score = h.score(config.mean_logprob);
            e.ended_with_stop = h.stopped;
            std::string text;
            for (int tok : h.tokens) {
                if (tok == kStopId) continue;
                if (!text.empty()) text += ' ';
                text += src.token_for(vocab, tok);
            }
            e.summary = std::move(text);
            trace.beams.push_back(std::move(e));
        }
    }
    return trace;
}

}  // namespace pglab
