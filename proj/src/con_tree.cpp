#include "emgf/con_tree.hpp"

#include <algorithm>
#include <cctype>

#include "emgf/errors.hpp"

namespace emgf {

namespace {

class BracketReader {
public:
    explicit BracketReader(std::string_view text) : text_(text) {}

    void skip_space() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool done() {
        skip_space();
        return pos_ >= text_.size();
    }
    char peek() {
        skip_space();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }
    void expect(char c) {
        if (peek() != c)
            throw DataError(std::string("con_tree: expected '") + c + "' at offset " + std::to_string(pos_) +
                            (pos_ >= text_.size() ? " (unbalanced brackets)" : ""));
        ++pos_;
    }
    std::string symbol() {
        skip_space();
        const std::size_t start = pos_;
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == '(' || c == ')' || std::isspace(static_cast<unsigned char>(c))) break;
            ++pos_;
        }
        return std::string(text_.substr(start, pos_ - start));
    }
    std::size_t offset() const { return pos_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::string> ConTree::leaves() const {
    std::vector<std::string> out;
    out.reserve(words_.size());
    for (std::size_t w : words_) out.push_back(nodes_[w].label);
    return out;
}

std::string ConTree::to_string() const {
    std::string out;
    auto emit = [&](auto&& self, std::size_t i) -> void {
        const ConNode& n = nodes_[i];
        if (n.is_word) {
            out += n.label;
            return;
        }
        out += '(';
        out += n.label;
        for (std::size_t k = 0; k < n.children.size(); ++k) {
            if (k > 0 || !n.label.empty()) out += ' ';
            self(self, n.children[k]);
        }
        out += ')';
    };
    emit(emit, 0);
    return out;
}

bool operator==(const ConTree& a, const ConTree& b) {
    if (a.nodes_.size() != b.nodes_.size() || a.words_ != b.words_) return false;
    for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
        const ConNode& x = a.nodes_[i];
        const ConNode& y = b.nodes_[i];
        if (x.label != y.label || x.is_word != y.is_word || x.parent != y.parent || x.children != y.children ||
            x.begin != y.begin || x.end != y.end || x.height != y.height)
            return false;
    }
    return true;
}

ConTree parse_bracketed(std::string_view text) {
    ConTree tree;
    BracketReader in(text);
    if (in.done()) throw DataError("con_tree: empty tree string");

    auto parse_node = [&](auto&& self, std::size_t parent) -> std::size_t {
        in.expect('(');
        const std::size_t id = tree.nodes_.size();
        tree.nodes_.push_back(ConNode{});
        tree.nodes_[id].parent = parent;
        tree.nodes_[id].begin = tree.words_.size();
        if (in.peek() != '(' && in.peek() != ')') tree.nodes_[id].label = in.symbol();
        std::size_t height = 0;
        while (true) {
            const char c = in.peek();
            if (c == ')') break;
            if (c == '\0') throw DataError("con_tree: unbalanced brackets, input ended inside a phrase");
            std::size_t child;
            if (c == '(') {
                child = self(self, id);
            } else {
                child = tree.nodes_.size();
                ConNode word;
                word.label = in.symbol();
                word.is_word = true;
                word.parent = id;
                word.begin = tree.words_.size();
                word.end = word.begin + 1;
                tree.nodes_.push_back(std::move(word));
                tree.words_.push_back(child);
            }
            tree.nodes_[id].children.push_back(child);
            height = std::max(height, tree.nodes_[child].height);
        }
        in.expect(')');
        ConNode& self_node = tree.nodes_[id];
        if (self_node.children.empty())
            throw DataError("con_tree: phrase '" + self_node.label + "' has no children at offset " +
                            std::to_string(in.offset()));
        self_node.height = height + 1;
        self_node.end = tree.words_.size();
        return id;
    };

    parse_node(parse_node, kNoParent);
    if (!in.done())
        throw DataError("con_tree: trailing input after the root at offset " + std::to_string(in.offset()) +
                        " (unbalanced brackets)");
    return tree;
}

ConTree parse_bracketed(std::string_view text, std::span<const std::string> tokens) {
    ConTree tree = parse_bracketed(text);
    const auto leaves = tree.leaves();
    const std::size_t common = std::min(leaves.size(), tokens.size());
    for (std::size_t i = 0; i < common; ++i)
        if (leaves[i] != tokens[i])
            throw DataError("con_tree: leaf/token mismatch at position " + std::to_string(i) + ": leaf '" +
                            leaves[i] + "' vs token '" + tokens[i] + "'");
    if (leaves.size() != tokens.size())
        throw DataError("con_tree: leaf/token mismatch at position " + std::to_string(common) + ": " +
                        std::to_string(leaves.size()) + " leaves vs " + std::to_string(tokens.size()) + " tokens");
    return tree;
}

Adjacency phrase_partition(const ConTree& tree, std::size_t level) {
    const std::size_t n = tree.token_count();
    std::vector<std::size_t> phrase(n);
    for (std::size_t t = 0; t < n; ++t) {
        std::size_t cur = tree.word_node(t);
        while (tree.node(cur).parent != kNoParent && tree.node(tree.node(cur).parent).height <= level)
            cur = tree.node(cur).parent;
        phrase[t] = cur;
    }
    Adjacency adj(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (phrase[i] == phrase[j]) adj.set(i, j);
    return adj;
}

std::vector<std::size_t> select_levels(const ConTree& tree, std::size_t count) {
    std::vector<std::size_t> levels;
    levels.reserve(count);
    for (std::size_t m = 0; m < count; ++m) levels.push_back(std::min(2 * m + 1, tree.height()));
    return levels;
}

ConGraphStack build_con_stack(const ConTree& tree, std::size_t count) {
    if (count == 0) throw ConfigError("build_con_stack: need at least one level");
    ConGraphStack stack;
    stack.levels = select_levels(tree, count);
    for (std::size_t level : stack.levels) stack.slices.push_back(phrase_partition(tree, level));
    return stack;
}

}  // namespace emgf
