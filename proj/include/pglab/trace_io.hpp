#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pglab/decode.hpp"

// Decode traces on disk: JSON Lines. Each trace is a header object carrying
// the document, config and summary, followed by one object per emitted token.
// Headers are recognized by their "format" key, so a file can hold any number
// of traces back to back. Format name "pglab-trace", version 1.

namespace pglab {

inline constexpr const char* kTraceFormatName = "pglab-trace";
inline constexpr int kTraceFormatVersion = 1;

namespace detail {

inline nlohmann::json trace_header_json(const DecodeTrace& tr) {
    nlohmann::json h;
    h["format"] = kTraceFormatName;
    h["version"] = kTraceFormatVersion;
    h["doc_id"] = tr.doc_id;
    h["article"] = tr.article_tokens;
    h["summary"] = tr.summary;
    h["score"] = tr.score;
    h["ended_with_stop"] = tr.ended_with_stop;
    h["steps"] = tr.steps.size();
    h["config"] = {{"beam_width", tr.config.beam_width}, {"max_len", tr.config.max_len},
                   {"p_min", tr.config.p_min},           {"coverage", tr.config.coverage_enabled},
                   {"seed", tr.config.seed},             {"mean_logprob", tr.config.mean_logprob}};
    return h;
}

inline nlohmann::json step_json(const TokenStep& s) {
    nlohmann::json j;
    j["step"] = s.step;
    j["token"] = s.token;
    j["origin"] = to_string(s.origin);
    j["p_gen"] = s.p_gen;
    j["p_gen_raw"] = s.p_gen_raw;
    j["h_gen"] = s.h_gen;
    j["h_copy"] = s.h_copy;
    j["copy_support"] = s.copy_support;
    std::vector<double> attn(s.attention.size());
    for (std::size_t i = 0; i < attn.size(); ++i) attn[i] = s.attention[i];
    j["attention"] = attn;
    return j;
}

}  // namespace detail

inline void write_traces_jsonl(std::ostream& out, const std::vector<DecodeTrace>& traces) {
    for (const auto& tr : traces) {
        out << detail::trace_header_json(tr).dump() << '\n';
        for (const auto& s : tr.steps) out << detail::step_json(s).dump() << '\n';
    }
}

inline void write_traces_jsonl(const std::string& path, const std::vector<DecodeTrace>& traces) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    write_traces_jsonl(out, traces);
    if (!out) throw IoError("write failed: " + path);
}

inline std::vector<DecodeTrace> read_traces_jsonl(std::istream& in, const std::string& origin = "<stream>") {
    std::vector<DecodeTrace> traces;
    std::string line;
    std::size_t lineno = 0;
    std::size_t expected_steps = 0;
    auto fail = [&](const std::string& what) {
        throw FormatError(origin + ":" + std::to_string(lineno) + ": " + what);
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) fail("invalid JSON");
        try {
            if (j.contains("format")) {
                if (j["format"] != kTraceFormatName) fail("unknown trace format " + j["format"].dump());
                if (j["version"].get<int>() != kTraceFormatVersion)
                    fail("unsupported trace version " + j["version"].dump());
                if (!traces.empty() && traces.back().steps.size() != expected_steps)
                    fail("previous trace truncated: expected " + std::to_string(expected_steps) + " steps, got " +
                         std::to_string(traces.back().steps.size()));
                DecodeTrace tr;
                tr.doc_id = j["doc_id"].get<std::string>();
                tr.article_tokens = j["article"].get<std::vector<std::string>>();
                tr.summary = j["summary"].get<std::string>();
                tr.score = j["score"].get<double>();
                tr.ended_with_stop = j["ended_with_stop"].get<bool>();
                const auto& c = j["config"];
                tr.config.beam_width = c["beam_width"].get<std::size_t>();
                tr.config.max_len = c["max_len"].get<std::size_t>();
                tr.config.p_min = c["p_min"].get<double>();
                tr.config.coverage_enabled = c["coverage"].get<bool>();
                tr.config.seed = c["seed"].get<std::uint64_t>();
                tr.config.mean_logprob = c["mean_logprob"].get<bool>();
                expected_steps = j["steps"].get<std::size_t>();
                traces.push_back(std::move(tr));
                continue;
            }
            if (traces.empty()) fail("token line before any trace header");
            TokenStep s;
            s.step = j["step"].get<std::size_t>();
            s.token = j["token"].get<std::string>();
            const std::string origin_str = j["origin"].get<std::string>();
            if (origin_str == "vocab")
                s.origin = TokenOrigin::kVocab;
            else if (origin_str == "source-only")
                s.origin = TokenOrigin::kSourceOnly;
            else
                fail("unknown token origin '" + origin_str + "'");
            s.p_gen = j["p_gen"].get<double>();
            s.p_gen_raw = j["p_gen_raw"].get<double>();
            s.h_gen = j["h_gen"].get<double>();
            s.h_copy = j["h_copy"].get<double>();
            s.copy_support = j["copy_support"].get<std::size_t>();
            const auto attn = j["attention"].get<std::vector<double>>();
            s.attention = Tensor1(attn.size());
            for (std::size_t i = 0; i < attn.size(); ++i) s.attention[i] = attn[i];
            traces.back().steps.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            fail(std::string("bad trace record: ") + e.what());
        }
    }
    if (!traces.empty() && traces.back().steps.size() != expected_steps)
        throw FormatError(origin + ": last trace truncated: expected " + std::to_string(expected_steps) +
                          " steps, got " + std::to_string(traces.back().steps.size()));
    return traces;
}

inline std::vector<DecodeTrace> read_traces_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    return read_traces_jsonl(in, path);
}

}  // namespace pglab
