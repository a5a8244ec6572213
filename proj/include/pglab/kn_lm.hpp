#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "pglab/entropy.hpp"
#include "pglab/errors.hpp"

namespace pglab {

// Interpolated Kneser-Ney trigram model with a fixed discount. Lower orders
// use continuation counts; the unigram level interpolates with the uniform
// distribution over the vocabulary, so every probability is positive. Query
// tokens outside the training vocabulary map to an UNK type.
class KnTrigramModel {
public:
    static KnTrigramModel train(const std::vector<std::string>& corpus, double discount = 0.75) {
        if (corpus.empty()) throw ValueError("KnTrigramModel: empty corpus");
        if (corpus.size() < 3) throw ValueError("KnTrigramModel: corpus must hold at least 3 tokens");
        if (!(discount > 0.0 && discount < 1.0)) throw ValueError("KnTrigramModel: discount outside (0,1)");

        KnTrigramModel m;
        m.discount_ = discount;
        m.add_type("<unk>");
        std::vector<int> ids;
        ids.reserve(corpus.size());
        for (const auto& t : corpus) ids.push_back(m.add_type(t));

        const std::uint64_t V = m.types_.size();
        std::unordered_map<std::uint64_t, std::uint64_t> c3;
        std::unordered_map<std::uint64_t, std::uint64_t> c2;
        for (std::size_t i = 2; i < ids.size(); ++i)
            ++c3[m.key3(ids[i - 2], ids[i - 1], ids[i], V)];
        for (std::size_t i = 1; i < ids.size(); ++i)
            ++c2[m.key2(ids[i - 1], ids[i], V)];

        m.c3_ = std::move(c3);
        for (const auto& [key, count] : m.c3_) {
            const std::uint64_t uv = key / V;
            const int w = static_cast<int>(key % V);
            const int v = static_cast<int>(uv % V);
            m.ctx3_total_[uv] += count;
            m.ctx3_types_[uv] += 1;
            const std::uint64_t vw = m.key2(v, w, V);
            // distinct left contexts of (v, w): each trigram key contributes one
            m.mid_cont_[vw] += 1;
            m.mid_ctx_total_[static_cast<std::uint64_t>(v)] += 1;
        }
        for (const auto& [vw, cont] : m.mid_cont_) {
            (void)cont;
            m.mid_ctx_types_[vw / V] += 1;
        }
        m.c2_ = std::move(c2);
        for (const auto& [key, count] : m.c2_) {
            (void)count;
            const int w = static_cast<int>(key % V);
            m.left_cont_[w] += 1;
            m.bigram_types_ += 1;
        }
        for (const auto& [w, cont] : m.left_cont_) {
            (void)w;
            if (cont > 0) m.unigram_cont_types_ += 1;
        }
        return m;
    }

    double discount() const { return discount_; }
    std::size_t vocab_size() const { return types_.size(); }
    const std::vector<std::string>& types() const { return types_; }

    int type_id(const std::string& token) const {
        auto it = ids_.find(token);
        return it == ids_.end() ? 0 : it->second;  // 0 is UNK
    }

    // P(w): discounted continuation unigram, interpolated with uniform.
    double p_unigram(int w) const {
        const double V = static_cast<double>(types_.size());
        const double uniform = 1.0 / V;
        if (bigram_types_ == 0) return uniform;
        const double total = static_cast<double>(bigram_types_);
        const double cont = static_cast<double>(lookup(left_cont_, w));
        const double head = std::max(cont - discount_, 0.0) / total;
        const double gamma = discount_ * static_cast<double>(unigram_cont_types_) / total;
        return head + gamma * uniform;
    }

    // P(w | v): discounted continuation bigram over trigram-table left contexts.
    double p_bigram(int v, int w) const {
        const std::uint64_t V = types_.size();
        const std::uint64_t vu = static_cast<std::uint64_t>(v);
        const double total = static_cast<double>(lookup(mid_ctx_total_, vu));
        if (total == 0.0) return p_unigram(w);
        const double cont = static_cast<double>(lookup(mid_cont_, key2(v, w, V)));
        const double head = std::max(cont - discount_, 0.0) / total;
        const double gamma = discount_ * static_cast<double>(lookup(mid_ctx_types_, vu)) / total;
        return head + gamma * p_unigram(w);
    }

    // P(w | u, v): discounted raw trigram counts over the observed context.
    double p_trigram(int u, int v, int w) const {
        const std::uint64_t V = types_.size();
        const std::uint64_t uv = static_cast<std::uint64_t>(u) * V + static_cast<std::uint64_t>(v);
        const double total = static_cast<double>(lookup(ctx3_total_, uv));
        if (total == 0.0) return p_bigram(v, w);
        const double count = static_cast<double>(lookup(c3_, key3(u, v, w, V)));
        const double head = std::max(count - discount_, 0.0) / total;
        const double gamma = discount_ * static_cast<double>(lookup(ctx3_types_, uv)) / total;
        return head + gamma * p_bigram(v, w);
    }

    // Next-token probability given the last tokens of `context` (uses at most
    // two); shorter contexts fall to the matching lower order.
    double prob(const std::vector<std::string>& context, const std::string& next) const {
        const int w = type_id(next);
        if (context.empty()) return p_unigram(w);
        if (context.size() == 1) return p_bigram(type_id(context[0]), w);
        return p_trigram(type_id(context[context.size() - 2]), type_id(context[context.size() - 1]), w);
    }

    // Full conditional distribution over the vocabulary for the same context
    // convention as prob().
    std::vector<double> next_distribution(const std::vector<std::string>& context) const {
        std::vector<double> dist(types_.size());
        if (context.empty()) {
            for (std::size_t w = 0; w < dist.size(); ++w) dist[w] = p_unigram(static_cast<int>(w));
        } else if (context.size() == 1) {
            const int v = type_id(context[0]);
            for (std::size_t w = 0; w < dist.size(); ++w) dist[w] = p_bigram(v, static_cast<int>(w));
        } else {
            const int u = type_id(context[context.size() - 2]);
            const int v = type_id(context[context.size() - 1]);
            for (std::size_t w = 0; w < dist.size(); ++w) dist[w] = p_trigram(u, v, static_cast<int>(w));
        }
        return dist;
    }

private:
    template <typename K>
    static std::uint64_t lookup(const std::unordered_map<K, std::uint64_t>& m, K key) {
        auto it = m.find(key);
        return it == m.end() ? 0 : it->second;
    }
    static std::uint64_t lookup(const std::unordered_map<int, std::uint64_t>& m, int key) {
        auto it = m.find(key);
        return it == m.end() ? 0 : it->second;
    }

    int add_type(const std::string& token) {
        auto it = ids_.find(token);
        if (it != ids_.end()) return it->second;
        const int id = static_cast<int>(types_.size());
        ids_.emplace(token, id);
        types_.push_back(token);
        return id;
    }

    std::uint64_t key2(int a, int b, std::uint64_t V) const {
        return static_cast<std::uint64_t>(a) * V + static_cast<std::uint64_t>(b);
    }
    std::uint64_t key3(int a, int b, int c, std::uint64_t V) const {
        return key2(a, b, V) * V + static_cast<std::uint64_t>(c);
    }

    double discount_ = 0.75;
    std::vector<std::string> types_;
    std::unordered_map<std::string, int> ids_;

    std::unordered_map<std::uint64_t, std::uint64_t> c3_;          // (u,v,w) -> count
    std::unordered_map<std::uint64_t, std::uint64_t> c2_;          // (v,w) -> count
    std::unordered_map<std::uint64_t, std::uint64_t> ctx3_total_;  // (u,v) -> sum of c3
    std::unordered_map<std::uint64_t, std::uint64_t> ctx3_types_;  // (u,v) -> distinct w
    std::unordered_map<std::uint64_t, std::uint64_t> mid_cont_;    // (v,w) -> distinct u with c3 > 0
    std::unordered_map<std::uint64_t, std::uint64_t> mid_ctx_total_;  // v -> sum over w of mid_cont
    std::unordered_map<std::uint64_t, std::uint64_t> mid_ctx_types_;  // v -> distinct w with mid_cont > 0
    std::unordered_map<int, std::uint64_t> left_cont_;  // w -> distinct v with c2 > 0
    std::uint64_t bigram_types_ = 0;                    // distinct (v,w) bigrams
    std::uint64_t unigram_cont_types_ = 0;              // distinct w with left_cont > 0
};

// Per-position normalized entropy of the model's next-token distribution
// given the tokens before that position.
inline std::vector<double> lm_entropy_series(const KnTrigramModel& model, const std::vector<std::string>& tokens) {
    if (tokens.empty()) throw ValueError("lm_entropy_series: empty token sequence");
    std::vector<double> out;
    out.reserve(tokens.size());
    std::vector<std::string> context;
    for (const auto& tok : tokens) {
        Tensor1 dist(model.vocab_size());
        const std::vector<double> d = model.next_distribution(context);
        for (std::size_t i = 0; i < d.size(); ++i) dist[i] = d[i];
        out.push_back(normalized_entropy(dist, model.vocab_size()));
        context.push_back(tok);
        if (context.size() > 2) context.erase(context.begin());
    }
    return out;
}

}  // namespace pglab
