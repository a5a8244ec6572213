#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pglab/errors.hpp"
#include "pglab/tensor.hpp"

namespace pglab {

inline double sigmoid(double x) {
    if (x >= 0.0) {
        const double z = std::exp(-x);
        return 1.0 / (1.0 + z);
    }
    const double z = std::exp(x);
    return z / (1.0 + z);
}

// Probability vector over some support; produced by softmax and friends.
using ProbVector = Tensor1;

// Numerically stable softmax (max subtraction), invariant under uniform
// shifts of the logits.
inline ProbVector softmax(const Tensor1& logits) {
    if (logits.empty()) throw ValueError("softmax: empty input");
    double max_logit = -std::numeric_limits<double>::infinity();
    for (double x : logits) {
        if (!std::isfinite(x)) throw ValueError("softmax: non-finite input");
        max_logit = std::max(max_logit, x);
    }
    ProbVector out(logits.size());
    double z = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - max_logit);
        z += out[i];
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i] /= z;
    return out;
}

// Gate parameters for one LSTM cell. Gate order throughout the codebase and
// the weights file: input (i), forget (f), output (o), candidate (g).
struct LstmCellParams {
    Tensor2 w_i, w_f, w_o, w_g;  // input-to-hidden, hidden x input
    Tensor2 u_i, u_f, u_o, u_g;  // hidden-to-hidden, hidden x hidden
    Tensor1 b_i, b_f, b_o, b_g;

    LstmCellParams() = default;
    LstmCellParams(std::size_t input_dim, std::size_t hidden_dim)
        : w_i(hidden_dim, input_dim),
          w_f(hidden_dim, input_dim),
          w_o(hidden_dim, input_dim),
          w_g(hidden_dim, input_dim),
          u_i(hidden_dim, hidden_dim),
          u_f(hidden_dim, hidden_dim),
          u_o(hidden_dim, hidden_dim),
          u_g(hidden_dim, hidden_dim),
          b_i(hidden_dim),
          b_f(hidden_dim),
          b_o(hidden_dim),
          b_g(hidden_dim) {}

    std::size_t input_dim() const { return w_i.cols(); }
    std::size_t hidden_dim() const { return w_i.rows(); }

    void validate() const {
        const std::size_t h = hidden_dim(), in = input_dim();
        auto chk2 = [&](const Tensor2& t, std::size_t r, std::size_t c, const char* name) {
            require(t.rows() == r && t.cols() == c, std::string("LstmCellParams: bad dims for ") + name);
        };
        chk2(w_f, h, in, "w_f");
        chk2(w_o, h, in, "w_o");
        chk2(w_g, h, in, "w_g");
        chk2(u_i, h, h, "u_i");
        chk2(u_f, h, h, "u_f");
        chk2(u_o, h, h, "u_o");
        chk2(u_g, h, h, "u_g");
        require(b_i.size() == h && b_f.size() == h && b_o.size() == h && b_g.size() == h,
                "LstmCellParams: bias dims");
    }
};

struct LstmState {
    Tensor1 h, c;
};

// Intermediates saved by lstm_step for the backward pass.
struct LstmStepCache {
    Tensor1 x, h_prev, c_prev;
    Tensor1 i, f, o, g;   // post-activation gates
    Tensor1 c, tanh_c;
};

inline LstmState lstm_step(const Tensor1& x, const Tensor1& h, const Tensor1& c,
                           const LstmCellParams& p, LstmStepCache* cache = nullptr) {
    const std::size_t hd = p.hidden_dim();
    require(x.size() == p.input_dim(), "lstm_step: input dim mismatch");
    require(h.size() == hd && c.size() == hd, "lstm_step: state dim mismatch");

    Tensor1 ai = matvec(p.w_i, x), af = matvec(p.w_f, x), ao = matvec(p.w_o, x), ag = matvec(p.w_g, x);
    matvec_add(p.u_i, h, ai);
    matvec_add(p.u_f, h, af);
    matvec_add(p.u_o, h, ao);
    matvec_add(p.u_g, h, ag);

    LstmState out;
    out.h = Tensor1(hd);
    out.c = Tensor1(hd);
    Tensor1 gi(hd), gf(hd), go(hd), gg(hd), tanh_c(hd);
    for (std::size_t k = 0; k < hd; ++k) {
        gi[k] = sigmoid(ai[k] + p.b_i[k]);
        gf[k] = sigmoid(af[k] + p.b_f[k]);
        go[k] = sigmoid(ao[k] + p.b_o[k]);
        gg[k] = std::tanh(ag[k] + p.b_g[k]);
        out.c[k] = gf[k] * c[k] + gi[k] * gg[k];
        tanh_c[k] = std::tanh(out.c[k]);
        out.h[k] = go[k] * tanh_c[k];
    }

    if (cache) {
        cache->x = x;
        cache->h_prev = h;
        cache->c_prev = c;
        cache->i = std::move(gi);
        cache->f = std::move(gf);
        cache->o = std::move(go);
        cache->g = std::move(gg);
        cache->c = out.c;
        cache->tanh_c = std::move(tanh_c);
    }
    return out;
}

// Gradients flowing out of one LSTM step: with respect to the inputs and
// accumulated into a parameter-gradient struct of the same shape as the cell.
struct LstmStepGrads {
    Tensor1 d_x, d_h_prev, d_c_prev;
};

// Backward through one lstm_step. d_h/d_c are gradients w.r.t. the step's
// outputs; parameter gradients accumulate into gp.
inline LstmStepGrads lstm_step_backward(const Tensor1& d_h, const Tensor1& d_c_in,
                                        const LstmStepCache& cc, const LstmCellParams& p,
                                        LstmCellParams& gp) {
    const std::size_t hd = p.hidden_dim();
    Tensor1 d_ai(hd), d_af(hd), d_ao(hd), d_ag(hd);
    LstmStepGrads out;
    out.d_c_prev = Tensor1(hd);

    for (std::size_t k = 0; k < hd; ++k) {
        // h = o * tanh(c); c = f*c_prev + i*g
        const double d_o = d_h[k] * cc.tanh_c[k];
        double d_c = d_c_in[k] + d_h[k] * cc.o[k] * (1.0 - cc.tanh_c[k] * cc.tanh_c[k]);
        const double d_i = d_c * cc.g[k];
        const double d_g = d_c * cc.i[k];
        const double d_f = d_c * cc.c_prev[k];
        out.d_c_prev[k] = d_c * cc.f[k];
        d_ai[k] = d_i * cc.i[k] * (1.0 - cc.i[k]);
        d_af[k] = d_f * cc.f[k] * (1.0 - cc.f[k]);
        d_ao[k] = d_o * cc.o[k] * (1.0 - cc.o[k]);
        d_ag[k] = d_g * (1.0 - cc.g[k] * cc.g[k]);
        gp.b_i[k] += d_ai[k];
        gp.b_f[k] += d_af[k];
        gp.b_o[k] += d_ao[k];
        gp.b_g[k] += d_ag[k];
    }

    outer_add(gp.w_i, d_ai, cc.x);
    outer_add(gp.w_f, d_af, cc.x);
    outer_add(gp.w_o, d_ao, cc.x);
    outer_add(gp.w_g, d_ag, cc.x);
    outer_add(gp.u_i, d_ai, cc.h_prev);
    outer_add(gp.u_f, d_af, cc.h_prev);
    outer_add(gp.u_o, d_ao, cc.h_prev);
    outer_add(gp.u_g, d_ag, cc.h_prev);

    out.d_x = matvec_transpose(p.w_i, d_ai);
    axpy(1.0, matvec_transpose(p.w_f, d_af), out.d_x);
    axpy(1.0, matvec_transpose(p.w_o, d_ao), out.d_x);
    axpy(1.0, matvec_transpose(p.w_g, d_ag), out.d_x);

    out.d_h_prev = matvec_transpose(p.u_i, d_ai);
    axpy(1.0, matvec_transpose(p.u_f, d_af), out.d_h_prev);
    axpy(1.0, matvec_transpose(p.u_o, d_ao), out.d_h_prev);
    axpy(1.0, matvec_transpose(p.u_g, d_ag), out.d_h_prev);

    return out;
}

// One named view into a flat parameter (or gradient) buffer.
struct ParamGroup {
    std::string name;
    double* data = nullptr;
    std::size_t len = 0;
};

struct GradReport {
    struct Group {
        std::string name;
        double max_rel_error = 0.0;
        std::size_t worst_index = 0;
        double analytic_at_worst = 0.0;
        double numeric_at_worst = 0.0;
    };
    std::vector<Group> groups;
    double max_rel_error = 0.0;
    std::string worst_group;
    // Relative error denominator is max(|analytic|, |numeric|, floor); the
    // floor keeps finite-difference noise on near-zero entries from
    // registering as disagreement.
    double denom_floor = 1e-4;
};

// Central-difference gradient verification. `params` are mutable views into
// the model being checked; `analytic` the matching gradient views; `loss`
// re-evaluates the loss at the current parameter values.
inline GradReport gradient_check(const std::function<double()>& loss,
                                 const std::vector<ParamGroup>& params,
                                 const std::vector<ParamGroup>& analytic, double h,
                                 double denom_floor = 1e-4) {
    if (!(h > 0.0)) throw ValueError("gradient_check: step must be positive");
    require(params.size() == analytic.size(), "gradient_check: group count mismatch");
    GradReport report;
    report.denom_floor = denom_floor;
    for (std::size_t g = 0; g < params.size(); ++g) {
        const ParamGroup& pg = params[g];
        const ParamGroup& ag = analytic[g];
        require(pg.len == ag.len, "gradient_check: group size mismatch for " + pg.name);
        GradReport::Group entry;
        entry.name = pg.name;
        for (std::size_t i = 0; i < pg.len; ++i) {
            const double saved = pg.data[i];
            pg.data[i] = saved + h;
            const double lp = loss();
            pg.data[i] = saved - h;
            const double lm = loss();
            pg.data[i] = saved;
            if (!std::isfinite(lp) || !std::isfinite(lm))
                throw ValueError("gradient_check: non-finite loss at " + pg.name);
            const double numeric = (lp - lm) / (2.0 * h);
            const double a = ag.data[i];
            const double denom = std::max({std::fabs(a), std::fabs(numeric), denom_floor});
            const double rel = std::fabs(a - numeric) / denom;
            if (rel > entry.max_rel_error) {
                entry.max_rel_error = rel;
                entry.worst_index = i;
                entry.analytic_at_worst = a;
                entry.numeric_at_worst = numeric;
            }
        }
        if (entry.max_rel_error > report.max_rel_error) {
            report.max_rel_error = entry.max_rel_error;
            report.worst_group = entry.name;
        }
        report.groups.push_back(std::move(entry));
    }
    return report;
}

}  // namespace pglab
