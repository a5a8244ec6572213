#pragma once

#include <cstddef>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "pglab/errors.hpp"

namespace pglab {

inline constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

// Constituency tree read from bracketed text. Internal nodes carry
// constituent labels, the parents of leaves carry POS tags, leaves carry the
// sentence tokens in order.
struct ParseNode {
    std::string label;
    std::size_t parent = kNoNode;
    std::vector<std::size_t> children;
    std::size_t depth = 0;  // edges from the root

    bool is_leaf() const { return children.empty(); }
};

struct ParseTree {
    std::vector<ParseNode> nodes;    // nodes[0] is the root
    std::vector<std::size_t> leaves; // node ids, in token order

    std::size_t token_count() const { return leaves.size(); }

    std::vector<std::string> tokens() const {
        std::vector<std::string> out;
        out.reserve(leaves.size());
        for (std::size_t id : leaves) out.push_back(nodes[id].label);
        return out;
    }

    // POS tag of token i: the label of the leaf's parent.
    const std::string& pos(std::size_t i) const {
        if (i >= leaves.size()) throw ValueError("ParseTree: token index out of range");
        const std::size_t parent = nodes[leaves[i]].parent;
        if (parent == kNoNode) throw ValueError("ParseTree: leaf without a preterminal parent");
        return nodes[parent].label;
    }

    std::vector<std::string> pos_tags() const {
        std::vector<std::string> out;
        out.reserve(leaves.size());
        for (std::size_t i = 0; i < leaves.size(); ++i) out.push_back(pos(i));
        return out;
    }
};

namespace detail {

struct ParseCursor {
    const std::string& text;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError("parse error at offset " + std::to_string(pos) + ": " + what);
    }
    void skip_space() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }
    bool at_end() {
        skip_space();
        return pos >= text.size();
    }
    char peek() {
        skip_space();
        if (pos >= text.size()) fail("unexpected end of input");
        return text[pos];
    }
    std::string atom() {
        skip_space();
        const std::size_t start = pos;
        while (pos < text.size() && text[pos] != '(' && text[pos] != ')' && text[pos] != ' ' && text[pos] != '\t')
            ++pos;
        if (pos == start) fail("expected a label or token");
        return text.substr(start, pos - start);
    }
};

inline std::size_t parse_node(ParseCursor& c, ParseTree& tree, std::size_t parent, std::size_t depth) {
    if (c.peek() != '(') c.fail("expected '('");
    ++c.pos;
    const std::size_t id = tree.nodes.size();
    tree.nodes.push_back(ParseNode{});
    tree.nodes[id].label = c.atom();
    tree.nodes[id].parent = parent;
    tree.nodes[id].depth = depth;
    while (true) {
        const char ch = c.peek();
        if (ch == ')') {
            ++c.pos;
            break;
        }
        if (ch == '(') {
            const std::size_t child = parse_node(c, tree, id, depth + 1);
            tree.nodes[id].children.push_back(child);
        } else {
            const std::size_t leaf = tree.nodes.size();
            tree.nodes.push_back(ParseNode{});
            tree.nodes[leaf].label = c.atom();
            tree.nodes[leaf].parent = id;
            tree.nodes[leaf].depth = depth + 1;
            tree.nodes[id].children.push_back(leaf);
            tree.leaves.push_back(leaf);
        }
    }
    if (tree.nodes[id].children.empty()) c.fail("node '" + tree.nodes[id].label + "' has no children");
    return id;
}

}  // namespace detail

// One bracketed sentence.
inline ParseTree parse_bracketed(const std::string& line) {
    detail::ParseCursor c{line};
    if (c.at_end()) c.fail("empty input");
    ParseTree tree;
    detail::parse_node(c, tree, kNoNode, 0);
    if (!c.at_end()) c.fail("trailing text after the closing ')'");
    for (std::size_t leaf : tree.leaves) {
        const std::size_t parent = tree.nodes[leaf].parent;
        // A preterminal must dominate exactly its one token.
        if (tree.nodes[parent].children.size() != 1)
            throw FormatError("token '" + tree.nodes[leaf].label + "' shares its parent '" +
                              tree.nodes[parent].label + "' with siblings; preterminals take one token");
    }
    return tree;
}

// One sentence per line; blank lines are skipped. Errors carry line numbers.
inline std::vector<ParseTree> read_parses(std::istream& in, const std::string& origin = "<stream>") {
    std::vector<ParseTree> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        bool blank = true;
        for (char ch : line)
            if (ch != ' ' && ch != '\t' && ch != '\r') blank = false;
        if (blank) continue;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        try {
            out.push_back(parse_bracketed(line));
        } catch (const FormatError& e) {
            throw FormatError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<ParseTree> read_parses_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    return read_parses(in, path);
}

inline std::string serialize(const ParseTree& tree, std::size_t node = 0) {
    const ParseNode& n = tree.nodes[node];
    if (n.is_leaf()) return n.label;
    std::string out = "(" + n.label;
    for (std::size_t child : n.children) {
        out += ' ';
        out += serialize(tree, child);
    }
    out += ')';
    return out;
}

inline void write_parses(std::ostream& out, const std::vector<ParseTree>& trees) {
    for (const auto& t : trees) out << serialize(t) << '\n';
}

// Edges from token i's leaf up to the root.
inline std::size_t root_distance(const ParseTree& tree, std::size_t i) {
    if (i >= tree.leaves.size()) throw ValueError("root_distance: token index out of range");
    return tree.nodes[tree.leaves[i]].depth;
}

// Edges on the unique tree path between the leaves of tokens i-1 and i.
// The first token of a sentence has no predecessor; callers treat that as a
// missing value, so this takes i >= 1.
inline std::size_t edge_distance(const ParseTree& tree, std::size_t i) {
    if (i >= tree.leaves.size()) throw ValueError("edge_distance: token index out of range");
    if (i == 0) throw ValueError("edge_distance: no previous token in the sentence");
    std::size_t a = tree.leaves[i - 1];
    std::size_t b = tree.leaves[i];
    std::size_t dist = 0;
    while (tree.nodes[a].depth > tree.nodes[b].depth) {
        a = tree.nodes[a].parent;
        ++dist;
    }
    while (tree.nodes[b].depth > tree.nodes[a].depth) {
        b = tree.nodes[b].parent;
        ++dist;
    }
    while (a != b) {
        a = tree.nodes[a].parent;
        b = tree.nodes[b].parent;
        dist += 2;
    }
    return dist;
}

}  // namespace pglab
