#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "pglab/nn.hpp"
#include "pglab/rng.hpp"
#include "pglab/tensor.hpp"
#include "pglab/vocab.hpp"

namespace pglab {

// Additive attention over encoder states, with an extra coverage feature
// when the model is configured with coverage:
//   e_i = v^T tanh(W_enc h_i + W_dec s + w_cov * cov_i + b)
struct AttentionParams {
    Tensor2 w_enc;    // attn_dim x 2*hidden
    Tensor2 w_dec;    // attn_dim x hidden
    Tensor1 w_cov;    // attn_dim; empty unless coverage is enabled
    Tensor1 score_v;  // attn_dim
    Tensor1 bias;     // attn_dim

    bool has_coverage() const { return !w_cov.empty(); }
};

struct ModelDims {
    std::size_t vocab_size = 0;
    std::size_t emb_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t attn_dim = 0;
};

// Every learned tensor of the summarizer: embeddings, the bidirectional
// encoder and the decoder cells, the encoder-to-decoder state reduction,
// attention, the vocabulary projection, and the four copy/generate switch
// parameters. Decoder input is the bare token embedding.
struct ModelParams {
    ModelDims dims;
    bool coverage = false;
    bool two_layer_vocab = false;

    Tensor2 embedding;  // V x emb

    LstmCellParams enc_fwd, enc_bwd;  // emb -> hidden
    LstmCellParams decoder;           // emb -> hidden

    Tensor2 reduce_h_w, reduce_c_w;  // hidden x 2*hidden
    Tensor1 reduce_h_b, reduce_c_b;

    AttentionParams attn;

    // Vocab head over [s_t ; h_star]: either one linear layer (default) or
    // linear-tanh-linear when two_layer_vocab is set.
    Tensor2 vocab_mid_w;  // hidden x 3*hidden (two-layer only)
    Tensor1 vocab_mid_b;
    Tensor2 vocab_w;  // V x 3*hidden, or V x hidden in two-layer mode
    Tensor1 vocab_b;

    Tensor1 delta_hstar;  // 2*hidden
    Tensor1 delta_s;      // hidden
    Tensor1 delta_x;      // emb
    double beta_ptr = 0.0;

    struct TensorRef {
        std::string name;
        double* data = nullptr;
        std::size_t len = 0;
        std::size_t rows = 0;  // 0 for vectors
        std::size_t cols = 0;
    };

    // Every tensor, in a fixed order shared by the weights container, the
    // optimizer, and the gradient checker.
    std::vector<TensorRef> tensor_refs() {
        std::vector<TensorRef> out;
        auto add2 = [&](const std::string& name, Tensor2& t) {
            out.push_back({name, t.data(), t.size(), t.rows(), t.cols()});
        };
        auto add1 = [&](const std::string& name, Tensor1& t) {
            out.push_back({name, t.data(), t.size(), 0, 0});
        };
        auto add_cell = [&](const std::string& prefix, LstmCellParams& c) {
            add2(prefix + ".w_i", c.w_i);
            add2(prefix + ".w_f", c.w_f);
            add2(prefix + ".w_o", c.w_o);
            add2(prefix + ".w_g", c.w_g);
            add2(prefix + ".u_i", c.u_i);
            add2(prefix + ".u_f", c.u_f);
            add2(prefix + ".u_o", c.u_o);
            add2(prefix + ".u_g", c.u_g);
            add1(prefix + ".b_i", c.b_i);
            add1(prefix + ".b_f", c.b_f);
            add1(prefix + ".b_o", c.b_o);
            add1(prefix + ".b_g", c.b_g);
        };
        add2("embedding", embedding);
        add_cell("enc_fwd", enc_fwd);
        add_cell("enc_bwd", enc_bwd);
        add_cell("decoder", decoder);
        add2("reduce_h.w", reduce_h_w);
        add1("reduce_h.b", reduce_h_b);
        add2("reduce_c.w", reduce_c_w);
        add1("reduce_c.b", reduce_c_b);
        add2("attention.w_enc", attn.w_enc);
        add2("attention.w_dec", attn.w_dec);
        if (coverage) add1("attention.w_cov", attn.w_cov);
        add1("attention.score_v", attn.score_v);
        add1("attention.bias", attn.bias);
        if (two_layer_vocab) {
            add2("vocab_mid.w", vocab_mid_w);
            add1("vocab_mid.b", vocab_mid_b);
        }
        add2("vocab_proj.w", vocab_w);
        add1("vocab_proj.b", vocab_b);
        add1("switch.delta_hstar", delta_hstar);
        add1("switch.delta_s", delta_s);
        add1("switch.delta_x", delta_x);
        out.push_back({"switch.beta_ptr", &beta_ptr, 1, 0, 0});
        return out;
    }

    std::vector<ParamGroup> param_groups() {
        std::vector<ParamGroup> out;
        for (auto& t : tensor_refs()) out.push_back({t.name, t.data, t.len});
        return out;
    }

    std::size_t parameter_count() {
        std::size_t n = 0;
        for (auto& t : tensor_refs()) n += t.len;
        return n;
    }

    void validate() const {
        const std::size_t V = dims.vocab_size, E = dims.emb_dim, H = dims.hidden_dim, A = dims.attn_dim;
        require(V >= 5 && E > 0 && H > 0 && A > 0, "ModelParams: dims must be positive (vocab >= 5)");
        require(embedding.rows() == V && embedding.cols() == E, "ModelParams: embedding dims");
        enc_fwd.validate();
        enc_bwd.validate();
        decoder.validate();
        require(enc_fwd.input_dim() == E && enc_fwd.hidden_dim() == H, "ModelParams: enc_fwd dims");
        require(enc_bwd.input_dim() == E && enc_bwd.hidden_dim() == H, "ModelParams: enc_bwd dims");
        require(decoder.input_dim() == E && decoder.hidden_dim() == H, "ModelParams: decoder dims");
        require(reduce_h_w.rows() == H && reduce_h_w.cols() == 2 * H && reduce_h_b.size() == H,
                "ModelParams: reduce_h dims");
        require(reduce_c_w.rows() == H && reduce_c_w.cols() == 2 * H && reduce_c_b.size() == H,
                "ModelParams: reduce_c dims");
        require(attn.w_enc.rows() == A && attn.w_enc.cols() == 2 * H, "ModelParams: attention w_enc dims");
        require(attn.w_dec.rows() == A && attn.w_dec.cols() == H, "ModelParams: attention w_dec dims");
        require(attn.score_v.size() == A && attn.bias.size() == A, "ModelParams: attention score dims");
        require(attn.has_coverage() == coverage, "ModelParams: coverage weight present iff coverage enabled");
        if (coverage) require(attn.w_cov.size() == A, "ModelParams: attention w_cov dims");
        if (two_layer_vocab) {
            require(vocab_mid_w.rows() == H && vocab_mid_w.cols() == 3 * H && vocab_mid_b.size() == H,
                    "ModelParams: vocab_mid dims");
            require(vocab_w.rows() == V && vocab_w.cols() == H && vocab_b.size() == V,
                    "ModelParams: vocab_proj dims (two-layer)");
        } else {
            require(vocab_mid_w.size() == 0 && vocab_mid_b.size() == 0,
                    "ModelParams: vocab_mid tensors present without two_layer_vocab");
            require(vocab_w.rows() == V && vocab_w.cols() == 3 * H && vocab_b.size() == V,
                    "ModelParams: vocab_proj dims");
        }
        require(delta_hstar.size() == 2 * H && delta_s.size() == H && delta_x.size() == E,
                "ModelParams: switch dims");
    }
};

// Allocates all tensors for the given dims, zero-filled.
inline ModelParams make_model_shell(const ModelDims& dims, bool coverage, bool two_layer_vocab = false) {
    const std::size_t V = dims.vocab_size, E = dims.emb_dim, H = dims.hidden_dim, A = dims.attn_dim;
    ModelParams p;
    p.dims = dims;
    p.coverage = coverage;
    p.two_layer_vocab = two_layer_vocab;
    p.embedding = Tensor2(V, E);
    p.enc_fwd = LstmCellParams(E, H);
    p.enc_bwd = LstmCellParams(E, H);
    p.decoder = LstmCellParams(E, H);
    p.reduce_h_w = Tensor2(H, 2 * H);
    p.reduce_c_w = Tensor2(H, 2 * H);
    p.reduce_h_b = Tensor1(H);
    p.reduce_c_b = Tensor1(H);
    p.attn.w_enc = Tensor2(A, 2 * H);
    p.attn.w_dec = Tensor2(A, H);
    if (coverage) p.attn.w_cov = Tensor1(A);
    p.attn.score_v = Tensor1(A);
    p.attn.bias = Tensor1(A);
    if (two_layer_vocab) {
        p.vocab_mid_w = Tensor2(H, 3 * H);
        p.vocab_mid_b = Tensor1(H);
        p.vocab_w = Tensor2(V, H);
    } else {
        p.vocab_w = Tensor2(V, 3 * H);
    }
    p.vocab_b = Tensor1(V);
    p.delta_hstar = Tensor1(2 * H);
    p.delta_s = Tensor1(H);
    p.delta_x = Tensor1(E);
    p.beta_ptr = 0.0;
    return p;
}

// Uniform(-scale, scale) init; forget-gate biases start at 1 so early cell
// state survives long enough to learn the recurrence.
inline ModelParams init_model_params(const ModelDims& dims, bool coverage, RngStream& rng,
                                     bool two_layer_vocab = false, double scale = 0.1) {
    ModelParams p = make_model_shell(dims, coverage, two_layer_vocab);
    for (auto& t : p.tensor_refs()) {
        for (std::size_t i = 0; i < t.len; ++i) t.data[i] = rng.uniform(-scale, scale);
    }
    p.enc_fwd.b_f.fill(1.0);
    p.enc_bwd.b_f.fill(1.0);
    p.decoder.b_f.fill(1.0);
    p.validate();
    return p;
}

inline ModelParams zero_like(const ModelParams& p) {
    ModelParams z = make_model_shell(p.dims, p.coverage, p.two_layer_vocab);
    return z;
}

// Pairwise in-place update: dst_i += alpha * src_i over every tensor.
inline void add_scaled(ModelParams& dst, ModelParams& src, double alpha) {
    auto a = dst.tensor_refs();
    auto b = src.tensor_refs();
    require(a.size() == b.size(), "add_scaled: model layouts differ");
    for (std::size_t t = 0; t < a.size(); ++t) {
        require(a[t].len == b[t].len, "add_scaled: tensor size mismatch at " + a[t].name);
        for (std::size_t i = 0; i < a[t].len; ++i) a[t].data[i] += alpha * b[t].data[i];
    }
}

inline void scale_params(ModelParams& p, double alpha) {
    for (auto& t : p.tensor_refs())
        for (std::size_t i = 0; i < t.len; ++i) t.data[i] *= alpha;
}

inline double global_norm(ModelParams& p) {
    double s = 0.0;
    for (auto& t : p.tensor_refs())
        for (std::size_t i = 0; i < t.len; ++i) s += t.data[i] * t.data[i];
    return std::sqrt(s);
}

}  // namespace pglab
