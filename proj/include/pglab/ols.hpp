#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "pglab/stats.hpp"
#include "pglab/tensor.hpp"

namespace pglab {

// Regression data: one row per observation, one named column per feature,
// and the response (the traced p_gen values).
struct FeatureMatrix {
    std::vector<std::string> names;  // column names, size k
    Tensor2 x;                       // n x k
    std::vector<double> y;           // n
    std::size_t dropped = 0;         // rows removed for missing features

    std::size_t n() const { return x.rows(); }
    std::size_t k() const { return x.cols(); }

    std::size_t column(const std::string& name) const {
        for (std::size_t j = 0; j < names.size(); ++j)
            if (names[j] == name) return j;
        throw ValueError("FeatureMatrix: no column named '" + name + "'");
    }

    // A new matrix holding only the named columns, in the given order.
    FeatureMatrix select(const std::vector<std::string>& keep) const {
        FeatureMatrix out;
        out.names = keep;
        out.y = y;
        out.dropped = dropped;
        out.x = Tensor2(x.rows(), keep.size());
        for (std::size_t j = 0; j < keep.size(); ++j) {
            const std::size_t src = column(keep[j]);
            for (std::size_t i = 0; i < x.rows(); ++i) out.x(i, j) = x(i, src);
        }
        return out;
    }
};

struct RegressionReport {
    std::vector<std::string> feature_names;  // "(intercept)" first when fitted
    std::vector<double> beta;
    std::vector<double> se;
    std::vector<double> t_stat;
    std::vector<double> p_value;
    double r_squared = 0.0;
    double adj_r_squared = 0.0;
    double rss = 0.0;
    std::size_t df = 0;  // n - fitted parameter count
    std::size_t n_obs = 0;
    bool intercept = false;

    // Non-intercept feature names, for nesting checks.
    std::vector<std::string> predictors() const {
        std::vector<std::string> out;
        for (const auto& n : feature_names)
            if (n != "(intercept)") out.push_back(n);
        return out;
    }
};

namespace detail {

// In-place Householder QR of a (n x k, n >= k); y receives Q^T y. Returns the
// R factor packed in a's upper triangle.
inline void householder_qr(Tensor2& a, std::vector<double>& y) {
    const std::size_t n = a.rows(), k = a.cols();
    for (std::size_t j = 0; j < k; ++j) {
        double norm = 0.0;
        for (std::size_t i = j; i < n; ++i) norm += a(i, j) * a(i, j);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue;  // zero column; R_jj stays 0 and rank check reports it
        const double alpha = a(j, j) > 0.0 ? -norm : norm;
        // v = x - alpha e_j, stored normalized so v[0] = 1 implicitly
        const double v0 = a(j, j) - alpha;
        std::vector<double> v(n - j);
        v[0] = v0;
        for (std::size_t i = j + 1; i < n; ++i) v[i - j] = a(i, j);
        const double vtv = [&] {
            double s = 0.0;
            for (double x : v) s += x * x;
            return s;
        }();
        a(j, j) = alpha;
        for (std::size_t i = j + 1; i < n; ++i) a(i, j) = 0.0;
        if (vtv == 0.0) continue;
        for (std::size_t c = j + 1; c < k; ++c) {
            double s = 0.0;
            for (std::size_t i = j; i < n; ++i) s += v[i - j] * a(i, c);
            const double f = 2.0 * s / vtv;
            for (std::size_t i = j; i < n; ++i) a(i, c) -= f * v[i - j];
        }
        double s = 0.0;
        for (std::size_t i = j; i < n; ++i) s += v[i - j] * y[i];
        const double f = 2.0 * s / vtv;
        for (std::size_t i = j; i < n; ++i) y[i] -= f * v[i - j];
    }
}

}  // namespace detail

// Ordinary least squares with classical standard errors and Student-t
// p-values. The design matrix must have full column rank; collinear columns
// are reported by name.
inline RegressionReport ols_fit(const FeatureMatrix& m, bool intercept = true) {
    const std::size_t n = m.n();
    const std::size_t k_in = m.k();
    if (m.y.size() != n) throw DimensionError("ols_fit: response length disagrees with row count");
    const std::size_t k = k_in + (intercept ? 1 : 0);
    if (n <= k) throw ValueError("ols_fit: need more observations than parameters (n=" + std::to_string(n) +
                                 ", parameters=" + std::to_string(k) + ")");
    if (!m.x.all_finite()) throw ValueError("ols_fit: non-finite feature value");
    for (double v : m.y)
        if (!std::isfinite(v)) throw ValueError("ols_fit: non-finite response value");

    RegressionReport rep;
    rep.intercept = intercept;
    rep.n_obs = n;
    if (intercept) rep.feature_names.push_back("(intercept)");
    rep.feature_names.insert(rep.feature_names.end(), m.names.begin(), m.names.end());

    Tensor2 design(n, k);
    std::vector<double> col_norm(k, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t j = 0;
        if (intercept) design(i, j++) = 1.0;
        for (std::size_t c = 0; c < k_in; ++c) design(i, j++) = m.x(i, c);
    }
    for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += design(i, j) * design(i, j);
        col_norm[j] = std::sqrt(s);
    }

    Tensor2 r = design;  // QR overwrites; keep `design` for residuals
    std::vector<double> qty = m.y;
    detail::householder_qr(r, qty);

    // Rank check: a vanishing diagonal means that column lies in the span of
    // the ones before it; name the involved set from the triangular solve.
    for (std::size_t j = 0; j < k; ++j) {
        const double scale = col_norm[j] > 0.0 ? col_norm[j] : 1.0;
        if (std::fabs(r(j, j)) > 1e-10 * scale) continue;
        std::vector<double> z(j, 0.0);
        for (std::size_t i = j; i-- > 0;) {
            double s = r(i, j);
            for (std::size_t c = i + 1; c < j; ++c) s -= r(i, c) * z[c];
            z[i] = r(i, i) != 0.0 ? s / r(i, i) : 0.0;
        }
        double zmax = 0.0;
        for (double v : z) zmax = std::max(zmax, std::fabs(v));
        std::string involved = rep.feature_names[j];
        for (std::size_t i = 0; i < j; ++i)
            if (std::fabs(z[i]) > 1e-6 * std::max(zmax, 1.0)) involved += ", " + rep.feature_names[i];
        throw ValueError("ols_fit: design matrix is rank deficient; collinear columns: " + involved);
    }

    // Back-substitute R beta = Q^T y.
    std::vector<double> beta(k);
    for (std::size_t i = k; i-- > 0;) {
        double s = qty[i];
        for (std::size_t c = i + 1; c < k; ++c) s -= r(i, c) * beta[c];
        beta[i] = s / r(i, i);
    }

    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = 0.0;
        for (std::size_t j = 0; j < k; ++j) fit += design(i, j) * beta[j];
        const double e = m.y[i] - fit;
        rss += e * e;
    }

    double tss = 0.0;
    if (intercept) {
        double mean = 0.0;
        for (double v : m.y) mean += v;
        mean /= static_cast<double>(n);
        for (double v : m.y) tss += (v - mean) * (v - mean);
    } else {
        for (double v : m.y) tss += v * v;
    }
    if (tss == 0.0) throw ValueError("ols_fit: response has zero variance");

    rep.beta = beta;
    rep.rss = rss;
    rep.df = n - k;
    rep.r_squared = 1.0 - rss / tss;
    const double ratio = intercept ? static_cast<double>(n - 1) / static_cast<double>(rep.df)
                                   : static_cast<double>(n) / static_cast<double>(rep.df);
    rep.adj_r_squared = 1.0 - (1.0 - rep.r_squared) * ratio;

    const double sigma2 = rss / static_cast<double>(rep.df);
    rep.se.resize(k);
    rep.t_stat.resize(k);
    rep.p_value.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        // Var(beta_j) = sigma^2 [ (R^T R)^-1 ]_jj = sigma^2 ||R^-T e_j||^2
        std::vector<double> w(k, 0.0);
        for (std::size_t i = j; i < k; ++i) {  // forward solve R^T w = e_j
            double s = (i == j) ? 1.0 : 0.0;
            for (std::size_t c = j; c < i; ++c) s -= r(c, i) * w[c];
            w[i] = s / r(i, i);
        }
        double wn = 0.0;
        for (double v : w) wn += v * v;
        rep.se[j] = std::sqrt(sigma2 * wn);
        rep.t_stat[j] = rep.se[j] > 0.0 ? beta[j] / rep.se[j]
                                        : std::numeric_limits<double>::infinity() * (beta[j] >= 0 ? 1 : -1);
        rep.p_value[j] = rep.se[j] > 0.0 ? t_test_p(rep.t_stat[j], static_cast<double>(rep.df)) : 0.0;
    }
    return rep;
}

inline RegressionReport ols_fit(const Tensor2& x, const std::vector<double>& y,
                                const std::vector<std::string>& names, bool intercept = true) {
    if (names.size() != x.cols()) throw DimensionError("ols_fit: name count disagrees with column count");
    FeatureMatrix m;
    m.names = names;
    m.x = x;
    m.y = y;
    return ols_fit(m, intercept);
}

struct AnovaResult {
    std::string reduced_id;
    std::string full_id;
    double ss_diff = 0.0;
    std::size_t df_diff = 0;
    double f = 0.0;
    double p = 1.0;
};

// F-test of a reduced model against a full model containing its features.
inline AnovaResult nested_anova(const RegressionReport& reduced, const RegressionReport& full) {
    if (reduced.n_obs != full.n_obs) throw ValueError("nested_anova: models fit on different observation counts");
    if (reduced.intercept != full.intercept) throw ValueError("nested_anova: intercept flags disagree");
    const auto rp = reduced.predictors();
    const auto fp = full.predictors();
    std::set<std::string> rset(rp.begin(), rp.end()), fset(fp.begin(), fp.end());
    if (rset.size() >= fset.size()) throw ValueError("nested_anova: reduced model must have fewer features");
    for (const auto& name : rset)
        if (!fset.count(name)) throw ValueError("nested_anova: models are not nested; reduced-only feature '" +
                                                name + "'");

    AnovaResult out;
    auto join = [](const std::set<std::string>& s) {
        std::string j;
        for (const auto& n : s) {
            if (!j.empty()) j += "+";
            j += n;
        }
        return j.empty() ? std::string("(empty)") : j;
    };
    out.reduced_id = join(rset);
    out.full_id = join(fset);
    out.df_diff = reduced.df - full.df;
    out.ss_diff = std::max(reduced.rss - full.rss, 0.0);
    if (full.df == 0) throw ValueError("nested_anova: full model has zero residual degrees of freedom");
    if (full.rss <= 0.0) {
        out.f = out.ss_diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
        out.p = out.ss_diff > 0.0 ? 0.0 : 1.0;
        return out;
    }
    out.f = (out.ss_diff / static_cast<double>(out.df_diff)) / (full.rss / static_cast<double>(full.df));
    out.p = f_test_p(out.f, static_cast<double>(out.df_diff), static_cast<double>(full.df));
    return out;
}

inline std::string significance_marker(double p) {
    if (p < 0.001) return "***";
    if (p < 0.01) return "**";
    if (p < 0.05) return "*";
    return "";
}

struct FeatureSetEntry {
    std::string set_name;
    std::vector<std::string> features;
    double adj_r_squared = 0.0;  // model fit to this set alone
};

struct FeatureSetReport {
    RegressionReport full;
    std::vector<FeatureSetEntry> sets;
    std::vector<std::pair<std::string, double>> top_pos;  // largest |beta| POS indicators
    std::vector<AnovaResult> anova;                       // each set's union-complement test vs full
};

// Per-feature-set adjusted R-squared (each set fit alone), the full model,
// top POS coefficients, and nested tests of dropping each set from the full
// model.
inline FeatureSetReport feature_set_report(const FeatureMatrix& m,
                                           const std::vector<FeatureSetEntry>& partition,
                                           const std::string& pos_prefix = "pos:",
                                           std::size_t top_pos_count = 8) {
    std::set<std::string> covered;
    for (const auto& set : partition) {
        if (set.features.empty()) throw ValueError("feature_set_report: empty feature set '" + set.set_name + "'");
        for (const auto& f : set.features) {
            m.column(f);  // throws on unknown names
            if (!covered.insert(f).second)
                throw ValueError("feature_set_report: feature '" + f + "' appears in two sets");
        }
    }
    for (const auto& name : m.names)
        if (!covered.count(name))
            throw ValueError("feature_set_report: partition does not cover feature '" + name + "'");

    FeatureSetReport rep;
    rep.full = ols_fit(m, true);
    for (const auto& set : partition) {
        FeatureSetEntry e = set;
        e.adj_r_squared = ols_fit(m.select(set.features), true).adj_r_squared;
        rep.sets.push_back(std::move(e));

        // Drop this set from the full model and test the difference.
        std::vector<std::string> rest;
        for (const auto& name : m.names) {
            bool in_set = std::find(set.features.begin(), set.features.end(), name) != set.features.end();
            if (!in_set) rest.push_back(name);
        }
        RegressionReport reduced = ols_fit(m.select(rest), true);
        rep.anova.push_back(nested_anova(reduced, rep.full));
    }

    std::vector<std::pair<std::string, double>> pos;
    for (std::size_t j = 0; j < rep.full.feature_names.size(); ++j) {
        const std::string& name = rep.full.feature_names[j];
        if (name.rfind(pos_prefix, 0) == 0) pos.emplace_back(name, rep.full.beta[j]);
    }
    std::sort(pos.begin(), pos.end(), [](const auto& a, const auto& b) {
        if (std::fabs(a.second) != std::fabs(b.second)) return std::fabs(a.second) > std::fabs(b.second);
        return a.first < b.first;
    });
    if (pos.size() > top_pos_count) pos.resize(top_pos_count);
    rep.top_pos = std::move(pos);
    return rep;
}

}  // namespace pglab
