#pragma once

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "pglab/analysis.hpp"
#include "pglab/csv.hpp"
#include "pglab/ols.hpp"

namespace pglab {

namespace detail {

inline std::string fmt(double v, int digits = 6) {
    std::ostringstream os;
    os << std::setprecision(digits) << v;
    return os.str();
}

}  // namespace detail

// Per-token plot data, one CSV row per traced token. Correlation
// contributions are computed within each trace, as in the per-summary plots;
// traces too short for a correlation (or with a constant series) leave those
// cells empty.
inline void write_token_plot_csv(std::ostream& out, const std::vector<DecodeTrace>& traces) {
    out << "doc_id,step,token,p_gen,h_gen,h_copy,cc_h_gen,cc_h_copy\n";
    for (const auto& tr : traces) {
        std::vector<double> x, hg, hc;
        for (const auto& s : tr.steps) {
            x.push_back(s.p_gen);
            hg.push_back(s.h_gen);
            hc.push_back(s.h_copy);
        }
        std::vector<double> cc_gen, cc_copy;
        bool have_gen = false, have_copy = false;
        try {
            cc_gen = correlation_contributions(x, hg);
            have_gen = true;
        } catch (const Error&) {
        }
        try {
            cc_copy = correlation_contributions(x, hc);
            have_copy = true;
        } catch (const Error&) {
        }
        for (std::size_t i = 0; i < tr.steps.size(); ++i) {
            const auto& s = tr.steps[i];
            out << csv_join({tr.doc_id, std::to_string(s.step), s.token, detail::fmt(s.p_gen, 17),
                             detail::fmt(s.h_gen, 17), detail::fmt(s.h_copy, 17),
                             have_gen ? detail::fmt(cc_gen[i], 17) : "",
                             have_copy ? detail::fmt(cc_copy[i], 17) : ""})
                << '\n';
        }
    }
}

// p_gen histogram with per-category composition. The final bin includes 1.0,
// so every token lands in exactly one bin.
struct PgenHistogram {
    std::size_t bins = 20;
    std::vector<std::string> categories;
    std::vector<std::vector<std::size_t>> counts;  // [bin][category]
    std::size_t total = 0;

    std::size_t bin_total(std::size_t b) const {
        std::size_t s = 0;
        for (std::size_t c = 0; c < categories.size(); ++c) s += counts[b][c];
        return s;
    }
};

inline PgenHistogram pgen_histogram(const std::vector<DecodeTrace>& traces, std::size_t bins = 20,
                                    const std::function<std::string(const std::string&)>& categorize =
                                        default_token_category) {
    if (bins < 1) throw ValueError("pgen_histogram: bins must be >= 1");
    PgenHistogram h;
    h.bins = bins;
    std::map<std::string, std::size_t> cat_ix;
    std::vector<std::vector<std::size_t>> by_cat;  // [category][bin]
    for (const auto& tr : traces) {
        for (const auto& s : tr.steps) {
            const std::string cat = categorize(s.token);
            auto [it, fresh] = cat_ix.emplace(cat, by_cat.size());
            if (fresh) by_cat.emplace_back(bins, 0);
            std::size_t b = static_cast<std::size_t>(s.p_gen * static_cast<double>(bins));
            if (b >= bins) b = bins - 1;
            ++by_cat[it->second][b];
            ++h.total;
        }
    }
    if (h.total == 0) throw ValueError("pgen_histogram: no traced tokens");
    for (const auto& [cat, ix] : cat_ix) {
        (void)ix;
        h.categories.push_back(cat);
    }
    h.counts.assign(bins, std::vector<std::size_t>(h.categories.size(), 0));
    std::size_t ci = 0;
    for (const auto& [cat, ix] : cat_ix) {
        (void)cat;
        for (std::size_t b = 0; b < bins; ++b) h.counts[b][ci] = by_cat[ix][b];
        ++ci;
    }
    return h;
}

inline void write_histogram_csv(std::ostream& out, const PgenHistogram& h) {
    std::vector<std::string> header = {"bin_lo", "bin_hi", "count"};
    for (const auto& c : h.categories) header.push_back(c);
    out << csv_join(header) << '\n';
    for (std::size_t b = 0; b < h.bins; ++b) {
        std::vector<std::string> row = {detail::fmt(static_cast<double>(b) / static_cast<double>(h.bins)),
                                        detail::fmt(static_cast<double>(b + 1) / static_cast<double>(h.bins)),
                                        std::to_string(h.bin_total(b))};
        for (std::size_t c = 0; c < h.categories.size(); ++c) row.push_back(std::to_string(h.counts[b][c]));
        out << csv_join(row) << '\n';
    }
}

inline void write_mass_report_csv(std::ostream& out, const MassReport& rep) {
    out << "category,count,count_share,pgen_mass,mass_share,exceed_count,exceed_share,threshold\n";
    for (const auto& c : rep.categories) {
        out << csv_join({c.category, std::to_string(c.count), detail::fmt(c.count_share),
                         detail::fmt(c.pgen_mass), detail::fmt(c.mass_share), std::to_string(c.exceed_count),
                         detail::fmt(c.exceed_share), detail::fmt(rep.threshold)})
            << '\n';
    }
}

inline void write_regression_csv(std::ostream& out, const RegressionReport& rep) {
    out << "feature,beta,se,t,p,signif\n";
    for (std::size_t j = 0; j < rep.feature_names.size(); ++j) {
        out << csv_join({rep.feature_names[j], detail::fmt(rep.beta[j], 12), detail::fmt(rep.se[j], 12),
                         detail::fmt(rep.t_stat[j], 12), detail::fmt(rep.p_value[j], 12),
                         significance_marker(rep.p_value[j])})
            << '\n';
    }
}

inline void write_feature_set_csv(std::ostream& out, const FeatureSetReport& rep) {
    out << "feature_set,adj_r_squared,anova_f,anova_p\n";
    for (std::size_t i = 0; i < rep.sets.size(); ++i) {
        const auto& s = rep.sets[i];
        const bool have_anova = i < rep.anova.size();
        out << csv_join({s.set_name, detail::fmt(s.adj_r_squared, 12),
                         have_anova ? detail::fmt(rep.anova[i].f, 12) : "",
                         have_anova ? detail::fmt(rep.anova[i].p, 12) : ""})
            << '\n';
    }
    out << csv_join({"full model", detail::fmt(rep.full.adj_r_squared, 12), "", ""}) << '\n';
}

// Aligned-text probe table: single-set fits, the full model, top POS betas.
inline void write_feature_set_text(std::ostream& out, const FeatureSetReport& rep) {
    out << "Feature set        adj R^2     F (dropping set)   p\n";
    out << "-----------------------------------------------------\n";
    std::ostringstream os;
    for (std::size_t i = 0; i < rep.sets.size(); ++i) {
        const auto& s = rep.sets[i];
        os.str("");
        os << std::left << std::setw(19) << s.set_name << std::setw(12) << detail::fmt(s.adj_r_squared, 4);
        if (i < rep.anova.size())
            os << std::setw(19) << detail::fmt(rep.anova[i].f, 5) << detail::fmt(rep.anova[i].p, 4)
               << significance_marker(rep.anova[i].p);
        out << os.str() << '\n';
    }
    out << std::string(53, '-') << '\n';
    out << "Full model adj R^2: " << detail::fmt(rep.full.adj_r_squared, 4) << "  (n=" << rep.full.n_obs
        << ", df=" << rep.full.df << ")\n";
    if (!rep.top_pos.empty()) {
        out << "\nLargest POS coefficients (|beta|):\n";
        for (const auto& [name, beta] : rep.top_pos)
            out << "  " << std::left << std::setw(24) << name << detail::fmt(beta, 5) << '\n';
    }
}

// Long-form sweep output: exactly one row per (article, p_min) pair.
inline void write_sweep_csv(std::ostream& out, const std::vector<DecodeTrace>& traces) {
    out << "doc_id,p_min,summary,score,ended_with_stop\n";
    for (const auto& tr : traces) {
        out << csv_join({tr.doc_id, detail::fmt(tr.config.p_min), tr.summary, detail::fmt(tr.score, 12),
                         tr.ended_with_stop ? "true" : "false"})
            << '\n';
    }
}

// Side-by-side sweep text, one block per article, one line per p_min.
inline void write_sweep_text(std::ostream& out, const std::vector<DecodeTrace>& traces) {
    std::string current;
    bool first = true;
    for (const auto& tr : traces) {
        if (first || tr.doc_id != current) {
            if (!first) out << '\n';
            out << "=== " << tr.doc_id << " ===\n";
            current = tr.doc_id;
            first = false;
        }
        out << "p_min " << detail::fmt(tr.config.p_min, 3) << ": " << tr.summary << '\n';
    }
}

// ---------------------------------------------------------------------------
// Self-contained SVG bar charts. No external assets, fixed palette.

struct BarSeries {
    std::string label;
    std::string color;
    std::vector<double> values;
};

namespace detail {

inline std::string svg_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

}  // namespace detail

namespace detail {

// Panel geometry shared with the stacked per-summary chart.
inline double panel_plot_width(std::size_t n, std::size_t series) {
    return std::max<double>(560.0, 26.0 * static_cast<double>(n * series));
}
inline double panel_width(std::size_t n, std::size_t series) {
    return 64.0 + panel_plot_width(n, series) + 16.0;
}
inline double panel_height(std::size_t series) {
    return 46.0 + 300.0 + 96.0 + 18.0 * static_cast<double>(series);
}

}  // namespace detail

// Grouped bars over shared x labels; supports negative values (axis at 0).
inline std::string svg_grouped_bars(const std::string& title, const std::vector<std::string>& x_labels,
                                    const std::vector<BarSeries>& series) {
    if (series.empty()) throw ValueError("svg_grouped_bars: no series");
    const std::size_t n = x_labels.size();
    for (const auto& s : series)
        if (s.values.size() != n) throw DimensionError("svg_grouped_bars: series length disagrees with labels");
    if (n == 0) throw ValueError("svg_grouped_bars: no bars");

    double lo = 0.0, hi = 0.0;
    for (const auto& s : series)
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (hi == lo) hi = lo + 1.0;
    const double span = hi - lo;
    lo -= 0.05 * span;
    hi += 0.05 * span;

    const double plot_w = detail::panel_plot_width(n, series.size());
    const double plot_h = 300.0;
    const double ml = 64.0, mt = 46.0, mb = 96.0, mr = 16.0;
    const double width = detail::panel_width(n, series.size());
    const double height = detail::panel_height(series.size());
    auto ypix = [&](double v) { return mt + plot_h * (hi - v) / (hi - lo); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\" font-family=\"sans-serif\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << ml << "\" y=\"24\" font-size=\"15\" fill=\"#222\">" << detail::svg_escape(title)
        << "</text>\n";

    for (int tick = 0; tick <= 4; ++tick) {
        const double v = lo + (hi - lo) * tick / 4.0;
        const double y = ypix(v);
        svg << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << ml + plot_w << "\" y2=\"" << y
            << "\" stroke=\"#ddd\"/>\n";
        svg << "<text x=\"" << ml - 6 << "\" y=\"" << y + 4 << "\" font-size=\"11\" fill=\"#444\" "
            << "text-anchor=\"end\">" << detail::fmt(v, 3) << "</text>\n";
    }
    if (lo < 0.0 && hi > 0.0)
        svg << "<line x1=\"" << ml << "\" y1=\"" << ypix(0.0) << "\" x2=\"" << ml + plot_w << "\" y2=\""
            << ypix(0.0) << "\" stroke=\"#888\"/>\n";

    const double group_w = plot_w / static_cast<double>(n);
    const double bar_w = group_w / static_cast<double>(series.size() + 1);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t s = 0; s < series.size(); ++s) {
            const double v = series[s].values[i];
            const double x = ml + group_w * static_cast<double>(i) + bar_w * (0.5 + static_cast<double>(s));
            const double y0 = ypix(std::max(v, 0.0));
            const double y1 = ypix(std::min(v, 0.0));
            svg << "<rect x=\"" << x << "\" y=\"" << y0 << "\" width=\"" << bar_w * 0.9 << "\" height=\""
                << std::max(y1 - y0, 0.5) << "\" fill=\"" << series[s].color << "\"/>\n";
        }
        const double tx = ml + group_w * (static_cast<double>(i) + 0.5);
        svg << "<text x=\"" << tx << "\" y=\"" << mt + plot_h + 12
            << "\" font-size=\"10\" fill=\"#333\" text-anchor=\"end\" transform=\"rotate(-60 " << tx << " "
            << mt + plot_h + 12 << ")\">" << detail::svg_escape(x_labels[i]) << "</text>\n";
    }
    for (std::size_t s = 0; s < series.size(); ++s) {
        const double y = mt + plot_h + mb - 20 + 18.0 * static_cast<double>(s);
        svg << "<rect x=\"" << ml << "\" y=\"" << y << "\" width=\"12\" height=\"12\" fill=\"" << series[s].color
            << "\"/>\n";
        svg << "<text x=\"" << ml + 18 << "\" y=\"" << y + 10 << "\" font-size=\"12\" fill=\"#222\">"
            << detail::svg_escape(series[s].label) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

// Fig. 1-style per-summary chart: correlation contributions on top, p_gen and
// the two entropies underneath, sharing token labels.
inline std::string token_plot_svg(const DecodeTrace& tr) {
    if (tr.steps.empty()) throw ValueError("token_plot_svg: trace has no steps");
    std::vector<std::string> labels;
    std::vector<double> p, hg, hc;
    for (const auto& s : tr.steps) {
        labels.push_back(s.token);
        p.push_back(s.p_gen);
        hg.push_back(s.h_gen);
        hc.push_back(s.h_copy);
    }
    std::vector<BarSeries> bottom = {{"p_gen", "#e08214", p},
                                     {"H_gen", "#1b9e77", hg},
                                     {"H_copy", "#7570b3", hc}};
    std::string top_panel;
    std::size_t top_series = 0;
    try {
        std::vector<BarSeries> top = {{"CC(p_gen, H_gen)", "#1b9e77", correlation_contributions(p, hg)},
                                      {"CC(p_gen, H_copy)", "#7570b3", correlation_contributions(p, hc)}};
        top_panel = svg_grouped_bars("Correlation contributions, " + tr.doc_id, labels, top);
        top_series = top.size();
    } catch (const Error&) {
        // constant series or single token: the contribution panel is undefined
    }
    std::string bottom_panel =
        svg_grouped_bars("Per-token switch and entropies, " + tr.doc_id, labels, bottom);
    if (top_panel.empty()) return bottom_panel;

    // Stack the two panels inside one root element; nested svg elements keep
    // their own coordinate systems.
    const double top_h = detail::panel_height(top_series);
    const double width =
        std::max(detail::panel_width(labels.size(), top_series), detail::panel_width(labels.size(), bottom.size()));
    const double height = top_h + detail::panel_height(bottom.size());
    bottom_panel.replace(bottom_panel.find("<svg "), 5, "<svg y=\"" + detail::fmt(top_h, 6) + "\" ");
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
        << top_panel << bottom_panel << "</svg>\n";
    return out.str();
}

inline std::string histogram_svg(const PgenHistogram& h) {
    static const char* palette[] = {"#e08214", "#1b9e77", "#7570b3", "#d95f02", "#66a61e", "#e6ab02"};
    std::vector<std::string> labels;
    for (std::size_t b = 0; b < h.bins; ++b)
        labels.push_back(detail::fmt(static_cast<double>(b) / static_cast<double>(h.bins), 2));
    std::vector<BarSeries> series;
    for (std::size_t c = 0; c < h.categories.size(); ++c) {
        BarSeries s;
        s.label = h.categories[c];
        s.color = palette[c % 6];
        for (std::size_t b = 0; b < h.bins; ++b) s.values.push_back(static_cast<double>(h.counts[b][c]));
        series.push_back(std::move(s));
    }
    return svg_grouped_bars("p_gen histogram by token category", labels, series);
}

}  // namespace pglab
