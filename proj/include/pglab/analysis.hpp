#pragma once

#include <cctype>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "pglab/decode.hpp"
#include "pglab/entropy.hpp"

namespace pglab {

// Aligned (p_gen, entropy) sequences pooled from decode traces, with the
// emitting token kept alongside for reporting.
struct SeriesPair {
    std::vector<double> x;  // p_gen
    std::vector<double> y;  // entropy
    std::vector<std::string> tokens;

    std::size_t size() const { return x.size(); }
};

enum class EntropyKind { kGen, kCopy };

inline SeriesPair pooled_series(const std::vector<DecodeTrace>& traces, EntropyKind kind) {
    SeriesPair out;
    for (const auto& tr : traces) {
        for (const auto& step : tr.steps) {
            out.x.push_back(step.p_gen);
            out.y.push_back(kind == EntropyKind::kGen ? step.h_gen : step.h_copy);
            out.tokens.push_back(step.token);
        }
    }
    return out;
}

inline std::vector<SeriesPair> per_trace_series(const std::vector<DecodeTrace>& traces, EntropyKind kind) {
    std::vector<SeriesPair> out;
    out.reserve(traces.size());
    for (const auto& tr : traces) {
        SeriesPair s;
        for (const auto& step : tr.steps) {
            s.x.push_back(step.p_gen);
            s.y.push_back(kind == EntropyKind::kGen ? step.h_gen : step.h_copy);
            s.tokens.push_back(step.token);
        }
        out.push_back(std::move(s));
    }
    return out;
}

namespace detail {

struct CenteredPair {
    std::vector<double> dx, dy;
    double denom = 0.0;  // sqrt(sum dx^2 * sum dy^2)
};

inline CenteredPair center_pair(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimensionError("correlation: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) throw ValueError("correlation: need at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw ValueError("correlation: non-finite input");
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    CenteredPair c;
    c.dx.resize(n);
    c.dy.resize(n);
    double sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        c.dx[i] = x[i] - mx;
        c.dy[i] = y[i] - my;
        sxx += c.dx[i] * c.dx[i];
        syy += c.dy[i] * c.dy[i];
    }
    if (sxx == 0.0) throw ValueError("correlation: first sequence has zero variance");
    if (syy == 0.0) throw ValueError("correlation: second sequence has zero variance");
    c.denom = std::sqrt(sxx * syy);
    return c;
}

}  // namespace detail

inline double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    detail::CenteredPair c = detail::center_pair(x, y);
    double num = 0.0;
    for (std::size_t i = 0; i < c.dx.size(); ++i) num += c.dx[i] * c.dy[i];
    return num / c.denom;
}

// Per-index terms whose average recovers pearson_r; individual terms are
// unbounded, unlike r itself.
inline std::vector<double> correlation_contributions(const std::vector<double>& x, const std::vector<double>& y) {
    detail::CenteredPair c = detail::center_pair(x, y);
    const double n = static_cast<double>(c.dx.size());
    std::vector<double> cc(c.dx.size());
    for (std::size_t i = 0; i < cc.size(); ++i) cc[i] = n * c.dx[i] * c.dy[i] / c.denom;
    return cc;
}

inline double pearson_r(const SeriesPair& s) { return pearson_r(s.x, s.y); }

// Token categorizer used when no POS tags are available: sentence-final
// punctuation, other punctuation, words.
inline std::string default_token_category(const std::string& token) {
    if (token == "." || token == "!" || token == "?") return "sentence-final punctuation";
    bool all_punct = !token.empty();
    for (unsigned char ch : token) {
        if (!std::ispunct(ch)) {
            all_punct = false;
            break;
        }
    }
    if (all_punct) return "other punctuation";
    return "word";
}

struct CategoryShare {
    std::string category;
    std::size_t count = 0;
    double count_share = 0.0;
    double pgen_mass = 0.0;
    double mass_share = 0.0;       // share of total p_gen mass
    std::size_t exceed_count = 0;  // tokens with p_gen > threshold
    double exceed_share = 0.0;     // among all exceeding tokens
};

struct MassReport {
    double threshold = 0.95;
    std::size_t total_tokens = 0;
    double total_mass = 0.0;
    std::size_t total_exceeding = 0;
    std::vector<CategoryShare> categories;  // sorted by descending mass share
};

inline MassReport pgen_mass_report(const std::vector<DecodeTrace>& traces,
                                   const std::function<std::string(const std::string&)>& categorize =
                                       default_token_category,
                                   double threshold = 0.95) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ValueError("pgen_mass_report: threshold outside [0,1]");
    MassReport rep;
    rep.threshold = threshold;
    std::map<std::string, CategoryShare> acc;
    for (const auto& tr : traces) {
        for (const auto& step : tr.steps) {
            CategoryShare& c = acc[categorize(step.token)];
            c.count += 1;
            c.pgen_mass += step.p_gen;
            if (step.p_gen > threshold) {
                c.exceed_count += 1;
                rep.total_exceeding += 1;
            }
            rep.total_tokens += 1;
            rep.total_mass += step.p_gen;
        }
    }
    if (rep.total_tokens == 0) throw ValueError("pgen_mass_report: no traced tokens");
    for (auto& [name, c] : acc) {
        c.category = name;
        c.count_share = static_cast<double>(c.count) / static_cast<double>(rep.total_tokens);
        c.mass_share = rep.total_mass > 0.0 ? c.pgen_mass / rep.total_mass : 0.0;
        c.exceed_share = rep.total_exceeding > 0
                             ? static_cast<double>(c.exceed_count) / static_cast<double>(rep.total_exceeding)
                             : 0.0;
        rep.categories.push_back(c);
    }
    std::sort(rep.categories.begin(), rep.categories.end(),
              [](const CategoryShare& a, const CategoryShare& b) {
                  if (a.mass_share != b.mass_share) return a.mass_share > b.mass_share;
                  return a.category < b.category;
              });
    return rep;
}

// N-gram filters for novelty measurement.
inline bool ngram_filter_all(const std::vector<std::string>&) { return true; }

inline bool ngram_filter_sentence_final(const std::vector<std::string>& gram) {
    if (gram.empty()) return false;
    const std::string& last = gram.back();
    return last == "." || last == "!" || last == "?";
}

// Fraction of qualifying summary n-grams that appear verbatim in the paired
// article. Summaries shorter than n contribute no qualifying n-grams.
inline double ngram_novelty(const std::vector<std::vector<std::string>>& summaries,
                            const std::vector<std::vector<std::string>>& articles, std::size_t n,
                            const std::function<bool(const std::vector<std::string>&)>& filter =
                                ngram_filter_sentence_final) {
    if (n < 1) throw ValueError("ngram_novelty: n must be >= 1");
    if (summaries.size() != articles.size()) throw DimensionError("ngram_novelty: pair count mismatch");
    std::size_t qualifying = 0;
    std::size_t found = 0;
    for (std::size_t p = 0; p < summaries.size(); ++p) {
        const auto& summary = summaries[p];
        const auto& article = articles[p];
        if (summary.size() < n) continue;
        std::unordered_set<std::string> article_grams;
        if (article.size() >= n) {
            for (std::size_t i = 0; i + n <= article.size(); ++i) {
                std::string key;
                for (std::size_t j = 0; j < n; ++j) {
                    key += article[i + j];
                    key += '\x1f';
                }
                article_grams.insert(std::move(key));
            }
        }
        std::vector<std::string> gram(n);
        for (std::size_t i = 0; i + n <= summary.size(); ++i) {
            for (std::size_t j = 0; j < n; ++j) gram[j] = summary[i + j];
            if (!filter(gram)) continue;
            ++qualifying;
            std::string key;
            for (const auto& tok : gram) {
                key += tok;
                key += '\x1f';
            }
            if (article_grams.count(key)) ++found;
        }
    }
    if (qualifying == 0) throw ValueError("ngram_novelty: no qualifying summary n-grams");
    return static_cast<double>(found) / static_cast<double>(qualifying);
}

}  // namespace pglab
