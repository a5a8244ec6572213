#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pglab/analysis.hpp"
#include "pglab/corpus.hpp"
#include "pglab/decode.hpp"
#include "pglab/features.hpp"
#include "pglab/kn_lm.hpp"
#include "pglab/ols.hpp"
#include "pglab/parallel.hpp"
#include "pglab/parse_tree.hpp"
#include "pglab/report.hpp"
#include "pglab/trace_io.hpp"
#include "pglab/train.hpp"
#include "pglab/weights_io.hpp"

namespace pglab::cli {

namespace detail {

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << content;
    if (!out) throw IoError("write failed: " + path);
}

template <typename Fn>
void write_stream(const std::string& path, Fn fill) {
    std::ostringstream os;
    fill(os);
    write_file(path, os.str());
}

// Articles for decoding: a corpus TSV (sources used, targets ignored) when
// the first line holds a tab, else whitespace-tokenized lines.
inline std::vector<std::vector<std::string>> read_articles(const std::string& path) {
    std::ifstream probe(path);
    if (!probe) throw IoError("cannot open: " + path);
    std::string first;
    std::getline(probe, first);
    probe.close();
    std::vector<std::vector<std::string>> articles;
    if (first.find('\t') != std::string::npos) {
        for (const auto& ex : read_corpus_tsv(path)) articles.push_back(ex.source);
        return articles;
    }
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        auto tokens = split_tokens(line);
        if (!tokens.empty()) articles.push_back(std::move(tokens));
    }
    if (articles.empty()) throw FormatError(path + ": no articles");
    return articles;
}

inline std::string doc_name(std::size_t i) { return "doc-" + std::to_string(i); }

struct DecodeJob {
    std::size_t article_ix = 0;
    DecodeConfig config;
};

inline std::vector<DecodeTrace> run_decode_jobs(const std::vector<std::vector<std::string>>& articles,
                                                const Vocabulary& vocab, const ModelParams& params,
                                                const std::vector<DecodeJob>& jobs, std::size_t jobs_n) {
    return parallel_map(
        jobs,
        [&](const DecodeJob& job) {
            return beam_search_decode(articles[job.article_ix], vocab, params, job.config,
                                      doc_name(job.article_ix));
        },
        jobs_n);
}

// Feature matrix on disk: CSV with the response first, then one column per
// feature. Everything numeric except the header.
inline void write_matrix_csv(const std::string& path, const FeatureMatrix& m) {
    std::ostringstream os;
    std::vector<std::string> header = {"p_gen"};
    header.insert(header.end(), m.names.begin(), m.names.end());
    os << csv_join(header) << '\n';
    for (std::size_t i = 0; i < m.n(); ++i) {
        std::vector<std::string> row = {pglab::detail::fmt(m.y[i], 17)};
        for (std::size_t j = 0; j < m.k(); ++j) row.push_back(pglab::detail::fmt(m.x(i, j), 17));
        os << csv_join(row) << '\n';
    }
    write_file(path, os.str());
}

inline FeatureMatrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw FormatError(path + ": empty matrix file");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = csv_split(line, lineno, path);
    if (header.empty() || header[0] != "p_gen")
        throw FormatError(path + ":1: first column must be p_gen");
    FeatureMatrix m;
    m.names.assign(header.begin() + 1, header.end());
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = csv_split(line, lineno, path);
        if (fields.size() != header.size())
            throw FormatError(path + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        std::vector<double> row(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j) row[j] = csv_number(fields[j], lineno, path);
        rows.push_back(std::move(row));
    }
    m.x = Tensor2(rows.size(), m.names.size());
    m.y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        m.y[i] = rows[i][0];
        for (std::size_t j = 0; j < m.names.size(); ++j) m.x(i, j) = rows[i][j + 1];
    }
    return m;
}

inline void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

inline std::string path_join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

// KN training stream for the features command: source then target tokens of
// every example, in corpus order.
inline std::vector<std::string> kn_stream(const Corpus& corpus) {
    std::vector<std::string> stream;
    for (const auto& ex : corpus) {
        stream.insert(stream.end(), ex.source.begin(), ex.source.end());
        stream.insert(stream.end(), ex.target.begin(), ex.target.end());
    }
    return stream;
}

inline void analyze_into(const std::string& dir, const std::vector<DecodeTrace>& traces, double threshold,
                         const std::vector<std::size_t>& novelty_ns, const std::string& format,
                         std::size_t max_svg) {
    ensure_dir(dir);
    const bool want_csv = format == "csv" || format == "both";
    const bool want_svg = format == "svg" || format == "both";

    if (want_csv) {
        write_stream(path_join(dir, "token_plot.csv"),
                     [&](std::ostream& os) { write_token_plot_csv(os, traces); });

        std::ostringstream corr;
        corr << "series,pearson_r,tokens\n";
        for (auto kind : {EntropyKind::kGen, EntropyKind::kCopy}) {
            const SeriesPair s = pooled_series(traces, kind);
            const char* name = kind == EntropyKind::kGen ? "p_gen vs h_gen" : "p_gen vs h_copy";
            try {
                corr << csv_join({name, pglab::detail::fmt(pearson_r(s), 12), std::to_string(s.size())}) << '\n';
            } catch (const Error& e) {
                corr << csv_join({name, "", std::to_string(s.size())}) << '\n';
                std::cerr << "analyze: " << name << ": " << e.what() << "\n";
            }
        }
        write_file(path_join(dir, "correlations.csv"), corr.str());

        try {
            write_stream(path_join(dir, "mass_report.csv"), [&](std::ostream& os) {
                write_mass_report_csv(os, pgen_mass_report(traces, default_token_category, threshold));
            });
        } catch (const Error& e) {
            std::cerr << "analyze: mass report skipped: " << e.what() << "\n";
        }

        std::ostringstream nov;
        nov << "n,filter,fraction\n";
        std::vector<std::vector<std::string>> summaries, articles;
        for (const auto& tr : traces) {
            std::vector<std::string> toks;
            for (const auto& s : tr.steps) toks.push_back(s.token);
            summaries.push_back(std::move(toks));
            articles.push_back(tr.article_tokens);
        }
        for (std::size_t n : novelty_ns) {
            for (const char* fname : {"sentence-final", "all"}) {
                const auto& filter = std::string(fname) == "all" ? ngram_filter_all : ngram_filter_sentence_final;
                try {
                    nov << csv_join({std::to_string(n), fname,
                                     pglab::detail::fmt(ngram_novelty(summaries, articles, n, filter), 12)})
                        << '\n';
                } catch (const Error&) {
                    nov << csv_join({std::to_string(n), fname, ""}) << '\n';
                }
            }
        }
        write_file(path_join(dir, "novelty.csv"), nov.str());

        try {
            write_stream(path_join(dir, "histogram.csv"),
                         [&](std::ostream& os) { write_histogram_csv(os, pgen_histogram(traces)); });
        } catch (const Error& e) {
            std::cerr << "analyze: histogram skipped: " << e.what() << "\n";
        }
    }
    if (want_svg) {
        try {
            write_file(path_join(dir, "histogram.svg"), histogram_svg(pgen_histogram(traces)));
        } catch (const Error& e) {
            std::cerr << "analyze: histogram chart skipped: " << e.what() << "\n";
        }
        for (std::size_t i = 0; i < traces.size() && i < max_svg; ++i) {
            if (traces[i].steps.empty()) continue;
            write_file(path_join(dir, "token_plot-" + traces[i].doc_id + ".svg"), token_plot_svg(traces[i]));
        }
    }
}

inline void probe_into(const std::string& dir, const FeatureMatrix& matrix, bool intercept) {
    ensure_dir(dir);
    const auto partition = default_feature_partition(matrix);
    if (partition.empty()) throw ValueError("probe: the matrix has no feature columns");
    if (!intercept) {
        // Single fit without intercept; the set report assumes an intercept.
        const RegressionReport rep = ols_fit(matrix, false);
        write_stream(path_join(dir, "regression.csv"), [&](std::ostream& os) { write_regression_csv(os, rep); });
        return;
    }
    const FeatureSetReport rep = feature_set_report(matrix, partition);
    write_stream(path_join(dir, "regression.csv"),
                 [&](std::ostream& os) { write_regression_csv(os, rep.full); });
    write_stream(path_join(dir, "feature_sets.csv"),
                 [&](std::ostream& os) { write_feature_set_csv(os, rep); });
    write_stream(path_join(dir, "probe.txt"), [&](std::ostream& os) { write_feature_set_text(os, rep); });
}

}  // namespace detail

inline int run(int argc, char** argv) {
    CLI::App app{"pointer-generator summarization lab: train, decode, and probe the copy/generate switch"};
    app.require_subcommand(1);

    // gen-corpus ------------------------------------------------------------
    auto* gen = app.add_subcommand("gen-corpus", "synthesize a copy or substitution task corpus (TSV)");
    struct {
        std::string task = "copy";
        std::string out;
        std::string vocab_out;
        SyntheticTaskSpec spec;
    } g;
    gen->add_option("--task", g.task, "task kind")->check(CLI::IsMember({"copy", "substitution"}));
    gen->add_option("--out", g.out, "corpus TSV path")->required();
    gen->add_option("--vocab-out", g.vocab_out, "also write the model vocabulary here");
    gen->add_option("--size", g.spec.corpus_size, "examples to generate")->required();
    gen->add_option("--content-vocab", g.spec.content_vocab, "distinct content token types");
    gen->add_option("--src-len-min", g.spec.src_len_min, "minimum source length");
    gen->add_option("--src-len-max", g.spec.src_len_max, "maximum source length");
    gen->add_option("--copy-window", g.spec.copy_window, "copy task target window");
    gen->add_option("--heldout", g.spec.heldout_types, "content types excluded from the model vocabulary");
    gen->add_option("--bijection-seed", g.spec.bijection_seed, "substitution bijection seed");
    gen->add_option("--seed", g.spec.seed, "corpus sampling seed");
    gen->callback([&] {
        g.spec.kind = g.task == "copy" ? TaskKind::kCopy : TaskKind::kSubstitution;
        write_corpus_tsv(make_synthetic_corpus(g.spec), g.out);
        if (!g.vocab_out.empty()) write_vocab_file(build_task_vocab(g.spec), g.vocab_out);
        std::cout << "wrote " << g.spec.corpus_size << " examples to " << g.out << "\n";
    });

    // train -----------------------------------------------------------------
    auto* train = app.add_subcommand("train", "train a model on a corpus TSV and write a weights file");
    struct {
        std::string corpus;
        std::string vocab;
        std::string out;
        std::string loss_out;
        std::string optimizer = "sgd";
        TrainConfig config;
    } t;
    train->add_option("--corpus", t.corpus, "training corpus TSV")->required();
    train->add_option("--vocab", t.vocab, "vocabulary file; derived from the corpus when omitted");
    train->add_option("--out", t.out, "weights file path")->required();
    train->add_option("--loss-out", t.loss_out, "write per-step mean loss as CSV");
    train->add_option("--emb", t.config.emb_dim, "embedding dim");
    train->add_option("--hidden", t.config.hidden_dim, "LSTM hidden dim");
    train->add_option("--attn", t.config.attn_dim, "attention dim");
    train->add_option("--lr", t.config.learning_rate, "learning rate");
    train->add_option("--optimizer", t.optimizer, "sgd or adagrad")->check(CLI::IsMember({"sgd", "adagrad"}));
    train->add_option("--batch", t.config.batch_size, "batch size");
    train->add_option("--steps", t.config.steps, "training steps");
    train->add_flag("--coverage", t.config.coverage_enabled, "enable the coverage attention input");
    train->add_flag("--two-layer-vocab", t.config.two_layer_vocab, "two-layer generation head");
    train->add_option("--clip", t.config.clip_norm, "global gradient norm clip; <= 0 disables");
    train->add_option("--coverage-loss-weight", t.config.coverage_loss_weight, "coverage penalty weight");
    train->add_option("--seed", t.config.seed, "initialization seed");
    train->callback([&] {
        t.config.optimizer = t.optimizer == "sgd" ? Optimizer::kSgd : Optimizer::kAdagrad;
        const Corpus corpus = read_corpus_tsv(t.corpus);
        TrainResult res = t.vocab.empty() ? train_model(corpus, t.config)
                                          : train_model(corpus, read_vocab_file(t.vocab), t.config);
        save_weights(t.out, res.params, res.vocab);
        if (!t.loss_out.empty()) {
            std::ostringstream os;
            os << "step,loss\n";
            for (std::size_t i = 0; i < res.loss_history.size(); ++i)
                os << i << ',' << pglab::detail::fmt(res.loss_history[i], 17) << '\n';
            detail::write_file(t.loss_out, os.str());
        }
        std::cout << "trained " << res.params.parameter_count() << " parameters, initial loss "
                  << pglab::detail::fmt(res.loss_history.front(), 6) << ", final loss "
                  << pglab::detail::fmt(res.loss_history.back(), 6) << ", weights in " << t.out << "\n";
    });

    // decode ----------------------------------------------------------------
    auto* dec = app.add_subcommand("decode", "beam-search decode articles and write JSONL traces");
    struct {
        std::string weights;
        std::string articles;
        std::string out;
        std::string summary_out;
        DecodeConfig config;
        std::size_t jobs = 0;
    } d;
    dec->add_option("--weights", d.weights, "weights file")->required();
    dec->add_option("--articles", d.articles, "articles: corpus TSV or one whitespace-tokenized line each")
        ->required();
    dec->add_option("--out", d.out, "trace JSONL path")->required();
    dec->add_option("--summary-out", d.summary_out, "also write one summary per line here");
    dec->add_option("--pmin", d.config.p_min, "p_min intervention in [0,1]");
    dec->add_option("--beam-width", d.config.beam_width, "beam width");
    dec->add_option("--max-len", d.config.max_len, "maximum summary length");
    auto* cov_flag = dec->add_flag("--coverage,!--no-coverage", d.config.coverage_enabled,
                                   "must match the model; inferred from the weights when omitted");
    dec->add_option("--seed", d.config.seed, "recorded in the trace header");
    dec->add_option("--jobs", d.jobs, "worker threads; 0 = hardware");
    dec->callback([&] {
        LoadedModel model = load_weights(d.weights);
        if (cov_flag->count() == 0) d.config.coverage_enabled = model.params.coverage;
        const auto articles = detail::read_articles(d.articles);
        std::vector<detail::DecodeJob> jobs;
        for (std::size_t i = 0; i < articles.size(); ++i) jobs.push_back({i, d.config});
        const auto traces = detail::run_decode_jobs(articles, model.vocab, model.params, jobs, d.jobs);
        write_traces_jsonl(d.out, traces);
        if (!d.summary_out.empty()) {
            std::ostringstream os;
            for (const auto& tr : traces) os << tr.summary << '\n';
            detail::write_file(d.summary_out, os.str());
        }
        std::cout << "decoded " << traces.size() << " articles into " << d.out << "\n";
    });

    // sweep -----------------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "decode across a p_min list and emit side-by-side summaries");
    struct {
        std::string weights;
        std::string articles;
        std::string out;
        std::string text_out;
        std::string traces_dir;
        std::vector<double> pmin_list = {0.0, 0.25, 0.5, 0.75, 1.0};
        DecodeConfig config;
        std::size_t jobs = 0;
    } s;
    sweep->add_option("--weights", s.weights, "weights file")->required();
    sweep->add_option("--articles", s.articles, "articles file (as in decode)")->required();
    sweep->add_option("--out", s.out, "sweep CSV path")->required();
    sweep->add_option("--text-out", s.text_out, "side-by-side text path");
    sweep->add_option("--traces-dir", s.traces_dir, "also write full traces per p_min into this directory");
    sweep->add_option("--pmin-list", s.pmin_list, "p_min values")->delimiter(',');
    sweep->add_option("--beam-width", s.config.beam_width, "beam width");
    sweep->add_option("--max-len", s.config.max_len, "maximum summary length");
    sweep->add_option("--seed", s.config.seed, "recorded in trace headers");
    sweep->add_option("--jobs", s.jobs, "worker threads; 0 = hardware");
    sweep->callback([&] {
        if (s.pmin_list.empty()) throw ValueError("sweep: empty p_min list");
        LoadedModel model = load_weights(s.weights);
        s.config.coverage_enabled = model.params.coverage;
        const auto articles = detail::read_articles(s.articles);
        std::vector<detail::DecodeJob> jobs;
        for (std::size_t i = 0; i < articles.size(); ++i) {
            for (double pmin : s.pmin_list) {
                detail::DecodeJob job{i, s.config};
                job.config.p_min = pmin;
                jobs.push_back(job);
            }
        }
        const auto traces = detail::run_decode_jobs(articles, model.vocab, model.params, jobs, s.jobs);
        detail::write_stream(s.out, [&](std::ostream& os) { write_sweep_csv(os, traces); });
        if (!s.text_out.empty())
            detail::write_stream(s.text_out, [&](std::ostream& os) { write_sweep_text(os, traces); });
        if (!s.traces_dir.empty()) {
            detail::ensure_dir(s.traces_dir);
            for (std::size_t p = 0; p < s.pmin_list.size(); ++p) {
                std::vector<DecodeTrace> slice;
                for (std::size_t i = p; i < traces.size(); i += s.pmin_list.size()) slice.push_back(traces[i]);
                write_traces_jsonl(
                    detail::path_join(s.traces_dir,
                                      "traces-pmin-" + pglab::detail::fmt(s.pmin_list[p], 3) + ".jsonl"),
                    slice);
            }
        }
        std::cout << "swept " << articles.size() << " articles over " << s.pmin_list.size()
                  << " p_min values into " << s.out << "\n";
    });

    // analyze ---------------------------------------------------------------
    auto* ana = app.add_subcommand("analyze", "entropy/correlation/mass/novelty reports from traces");
    struct {
        std::string traces;
        std::string out_dir;
        double threshold = 0.95;
        std::vector<std::size_t> novelty_ns = {5};
        std::string format = "both";
        std::size_t max_svg = 8;
    } a;
    ana->add_option("--traces", a.traces, "trace JSONL file")->required();
    ana->add_option("--out-dir", a.out_dir, "output directory")->required();
    ana->add_option("--threshold", a.threshold, "p_gen exceedance threshold");
    ana->add_option("--novelty-n", a.novelty_ns, "n-gram orders for the overlap report")->delimiter(',');
    ana->add_option("--report-format", a.format, "csv, svg, or both")
        ->check(CLI::IsMember({"csv", "svg", "both"}));
    ana->add_option("--max-svg", a.max_svg, "per-summary SVG cap");
    ana->callback([&] {
        const auto traces = read_traces_jsonl(a.traces);
        detail::analyze_into(a.out_dir, traces, a.threshold, a.novelty_ns, a.format, a.max_svg);
        std::cout << "analyzed " << traces.size() << " traces into " << a.out_dir << "\n";
    });

    // features --------------------------------------------------------------
    auto* feat = app.add_subcommand("features", "assemble the probe feature matrix from traces and parses");
    struct {
        std::string traces;
        std::string parses;
        std::string corpus;
        std::string out;
        std::string sidecar;
        double discount = 0.75;
        bool no_entropies = false, no_structure = false, no_pos = false;
        bool use_lstm = false, use_parser = false;
    } f;
    feat->add_option("--traces", f.traces, "trace JSONL file")->required();
    feat->add_option("--parses", f.parses, "bracketed parses, one sentence per line");
    feat->add_option("--corpus", f.corpus, "corpus TSV for the n-gram language model");
    feat->add_option("--out", f.out, "feature matrix CSV path")->required();
    feat->add_option("--sidecar", f.sidecar, "external entropies CSV (doc_id,step,h_lstm,h_parser)");
    feat->add_option("--kn-discount", f.discount, "Kneser-Ney discount");
    feat->add_flag("--no-entropies", f.no_entropies, "drop h_gen/h_copy/h_ngram");
    feat->add_flag("--no-structure", f.no_structure, "drop d_edge/d_root");
    feat->add_flag("--no-pos", f.no_pos, "drop the POS block");
    feat->add_flag("--use-lstm", f.use_lstm, "include sidecar h_lstm");
    feat->add_flag("--use-parser", f.use_parser, "include sidecar h_parser");
    feat->callback([&] {
        FeatureSelection sel;
        sel.entropies = !f.no_entropies;
        sel.structure = !f.no_structure;
        sel.pos = !f.no_pos;
        sel.external_lstm = f.use_lstm;
        sel.external_parser = f.use_parser;
        if ((sel.structure || sel.pos) && f.parses.empty())
            throw ValueError("features: structural/POS features need --parses");
        if (sel.entropies && f.corpus.empty())
            throw ValueError("features: the n-gram entropy needs --corpus");
        const auto traces = read_traces_jsonl(f.traces);
        const auto parses = f.parses.empty() ? std::vector<ParseTree>{} : read_parses_file(f.parses);
        ExternalEntropies ext;
        if (!f.sidecar.empty()) ext = read_entropy_sidecar_file(f.sidecar);
        // A tiny fallback stream keeps the model constructible when entropies
        // are off; it is never queried in that case.
        const KnTrigramModel kn = KnTrigramModel::train(
            f.corpus.empty() ? std::vector<std::string>{"a", "a", "a"} : detail::kn_stream(read_corpus_tsv(f.corpus)),
            f.discount);
        const FeatureBuild build =
            build_feature_matrix(traces, parses, kn, sel, f.sidecar.empty() ? nullptr : &ext);
        detail::write_matrix_csv(f.out, build.matrix);
        std::cout << "kept " << build.matrix.n() << " of " << build.total_tokens << " tokens ("
                  << build.matrix.dropped << " dropped)";
        if (!build.pos_reference.empty()) std::cout << ", POS reference level " << build.pos_reference;
        std::cout << ", matrix in " << f.out << "\n";
    });

    // probe -----------------------------------------------------------------
    auto* probe = app.add_subcommand("probe", "regress p_gen on the feature matrix");
    struct {
        std::string matrix;
        std::string out_dir;
        bool no_intercept = false;
    } p;
    probe->add_option("--matrix", p.matrix, "feature matrix CSV")->required();
    probe->add_option("--out-dir", p.out_dir, "output directory")->required();
    probe->add_flag("--no-intercept", p.no_intercept, "fit without an intercept");
    probe->callback([&] {
        detail::probe_into(p.out_dir, detail::read_matrix_csv(p.matrix), !p.no_intercept);
        std::cout << "probe reports in " << p.out_dir << "\n";
    });

    // report ----------------------------------------------------------------
    auto* rep = app.add_subcommand("report", "bundle analysis (and probe, when inputs allow) into one directory");
    struct {
        std::string traces;
        std::string parses;
        std::string corpus;
        std::string sidecar;
        std::string out_dir;
        double threshold = 0.95;
        std::vector<std::size_t> novelty_ns = {5};
        std::size_t max_svg = 8;
    } r;
    rep->add_option("--traces", r.traces, "trace JSONL file")->required();
    rep->add_option("--out-dir", r.out_dir, "output directory")->required();
    rep->add_option("--parses", r.parses, "bracketed parses enabling the probe stage");
    rep->add_option("--corpus", r.corpus, "corpus TSV for the n-gram model");
    rep->add_option("--sidecar", r.sidecar, "external entropies CSV");
    rep->add_option("--threshold", r.threshold, "p_gen exceedance threshold");
    rep->add_option("--novelty-n", r.novelty_ns, "n-gram orders")->delimiter(',');
    rep->add_option("--max-svg", r.max_svg, "per-summary SVG cap");
    rep->callback([&] {
        const auto traces = read_traces_jsonl(r.traces);
        detail::ensure_dir(r.out_dir);
        detail::analyze_into(detail::path_join(r.out_dir, "analysis"), traces, r.threshold, r.novelty_ns, "both",
                             r.max_svg);
        std::string note = "analysis/";
        if (!r.parses.empty() && !r.corpus.empty()) {
            FeatureSelection sel;
            sel.external_lstm = sel.external_parser = !r.sidecar.empty();
            ExternalEntropies ext;
            if (!r.sidecar.empty()) ext = read_entropy_sidecar_file(r.sidecar);
            const KnTrigramModel kn = KnTrigramModel::train(detail::kn_stream(read_corpus_tsv(r.corpus)));
            const FeatureBuild build = build_feature_matrix(traces, read_parses_file(r.parses), kn, sel,
                                                            r.sidecar.empty() ? nullptr : &ext);
            detail::write_matrix_csv(detail::path_join(r.out_dir, "features.csv"), build.matrix);
            detail::probe_into(detail::path_join(r.out_dir, "probe"), build.matrix, true);
            note += ", features.csv, probe/";
        }
        std::cout << "report bundle in " << r.out_dir << " (" << note << ")\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const Error& e) {
        std::cerr << "pglab: error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "pglab: internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace pglab::cli
