// SPDX-License-Identifier: Apache-2.0
#include <cctype>
#include <set>
#include <sstream>

#include "vrl/dsl/dsl.hpp"

namespace vrl::dsl {

DslError::DslError(Code code, const std::string& message, std::size_t line, std::size_t column)
    : std::runtime_error(line == 0 ? message
                                   : message + " at " + std::to_string(line) + ":" + std::to_string(column)),
      code_(code),
      line_(line),
      column_(column) {}

std::string path_id(const std::vector<std::size_t>& path) {
    std::string id = "$";
    for (auto i : path) id += "." + std::to_string(i);
    return id;
}

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$' || c == '.' ||
           c == '-' || c == '+';
}

struct Token {
    enum class Kind { LParen, RParen, Word, String, Equals, Colon, End };
    Kind kind = Kind::End;
    std::string text;
    std::size_t line = 1;
    std::size_t column = 1;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    std::vector<Token> run(std::string& metadata) {
        std::vector<Token> out;
        while (true) {
            skip_space_and_comments(metadata);
            Token tok;
            tok.line = line_;
            tok.column = col_;
            if (pos_ >= src_.size()) {
                out.push_back(tok);
                return out;
            }
            const char c = src_[pos_];
            if (c == '(') {
                tok.kind = Token::Kind::LParen;
                advance();
            } else if (c == ')') {
                tok.kind = Token::Kind::RParen;
                advance();
            } else if (c == '=') {
                tok.kind = Token::Kind::Equals;
                advance();
            } else if (c == ':') {
                tok.kind = Token::Kind::Colon;
                advance();
            } else if (c == '"') {
                tok.kind = Token::Kind::String;
                tok.text = read_string();
            } else if (is_word_char(c)) {
                tok.kind = Token::Kind::Word;
                while (pos_ < src_.size() && is_word_char(src_[pos_])) {
                    tok.text += src_[pos_];
                    advance();
                }
            } else {
                throw DslError(DslError::Code::SyntaxError,
                               std::string("unexpected character '") + c + "'", line_, col_);
            }
            out.push_back(std::move(tok));
        }
    }

private:
    void advance() {
        if (src_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    void skip_space_and_comments(std::string& metadata) {
        while (pos_ < src_.size()) {
            const char c = src_[pos_];
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else if (c == '#') {
                const bool meta = pos_ + 1 < src_.size() && src_[pos_ + 1] == '|';
                std::string text;
                while (pos_ < src_.size() && src_[pos_] != '\n') {
                    text += src_[pos_];
                    advance();
                }
                if (meta) {
                    text.erase(0, 2);
                    if (!text.empty() && text.front() == ' ') text.erase(0, 1);
                    if (!metadata.empty()) metadata += '\n';
                    metadata += text;
                }
            } else {
                return;
            }
        }
    }

    std::string read_string() {
        const auto line = line_;
        const auto col = col_;
        advance();  // opening quote
        std::string out;
        while (true) {
            if (pos_ >= src_.size()) {
                throw DslError(DslError::Code::SyntaxError, "unterminated string", line, col);
            }
            char c = src_[pos_];
            if (c == '"') {
                advance();
                return out;
            }
            if (c == '\\') {
                advance();
                if (pos_ >= src_.size()) continue;
                c = src_[pos_];
                out += c == 'n' ? '\n' : c;
                advance();
                continue;
            }
            out += c;
            advance();
        }
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;
    std::size_t col_ = 1;
};

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

    bt::BehaviorTree run(std::string metadata) {
        bt::BehaviorTree tree;
        tree.metadata = std::move(metadata);
        if (peek().kind != Token::Kind::LParen) fail("expected '(' to start the tree");
        tree.root = node(tree, {});
        if (peek().kind != Token::Kind::End) fail("unexpected input after the root node");
        return tree;
    }

private:
    const Token& peek(std::size_t ahead = 0) const {
        const auto i = std::min(pos_ + ahead, toks_.size() - 1);
        return toks_[i];
    }

    const Token& take() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }

    [[noreturn]] void fail(const std::string& message) const {
        const auto& t = peek();
        throw DslError(DslError::Code::SyntaxError, message, t.line, t.column);
    }

    bt::NodeId node(bt::BehaviorTree& tree, std::vector<std::size_t> path) {
        const Token& open = take();  // '('
        bt::BTNode n;
        if (peek().kind == Token::Kind::Word && peek(1).kind == Token::Kind::Colon) {
            n.id = take().text;
            take();
            if (n.id.empty()) fail("empty node name");
        } else {
            n.id = path_id(path);
        }
        if (peek().kind != Token::Kind::Word) fail("expected a node kind");
        const Token& kind_tok = take();
        auto kind = bt::node_kind_from_string(kind_tok.text);
        if (!kind) {
            throw DslError(DslError::Code::SyntaxError, "unknown node kind '" + kind_tok.text + "'",
                           kind_tok.line, kind_tok.column);
        }
        n.kind = *kind;
        if (bt::is_leaf(n.kind)) {
            if (peek().kind != Token::Kind::Word || peek(1).kind == Token::Kind::Equals) {
                fail("expected an action or condition kind after '" + kind_tok.text + "'");
            }
            n.leaf_kind = take().text;
        }
        while (peek().kind == Token::Kind::Word) {
            const Token& key = take();
            if (peek().kind != Token::Kind::Equals) fail("expected '=' after parameter '" + key.text + "'");
            take();
            if (peek().kind != Token::Kind::Word && peek().kind != Token::Kind::String) {
                fail("expected a value for parameter '" + key.text + "'");
            }
            const std::string value = take().text;
            if (!n.params.emplace(key.text, value).second) {
                throw DslError(DslError::Code::SyntaxError, "duplicate parameter '" + key.text + "'",
                               key.line, key.column);
            }
        }
        std::size_t index = 0;
        while (peek().kind == Token::Kind::LParen) {
            auto child_path = path;
            child_path.push_back(index++);
            n.children.push_back(node(tree, std::move(child_path)));
        }
        if (peek().kind != Token::Kind::RParen) {
            if (peek().kind == Token::Kind::End) {
                throw DslError(DslError::Code::SyntaxError, "unbalanced '(' (missing ')')", open.line,
                               open.column);
            }
            fail("expected ')'");
        }
        take();
        const auto id = n.id;
        if (tree.nodes.count(id) != 0) {
            throw DslError(DslError::Code::DuplicateNodeName, "duplicate node name '" + id + "'",
                           open.line, open.column);
        }
        tree.nodes.emplace(id, std::move(n));
        return id;
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

std::string quote_if_needed(const std::string& value) {
    bool bare = !value.empty();
    for (char c : value) bare = bare && is_word_char(c);
    if (bare) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"' || c == '\\') {
            out += '\\';
            out += c;
        } else if (c == '\n') {
            out += "\\n";
        } else {
            out += c;
        }
    }
    return out + "\"";
}

void write_node(const bt::BehaviorTree& tree, const bt::NodeId& id, std::vector<std::size_t>& path,
                int depth, std::ostringstream& os, std::set<bt::NodeId>& seen) {
    const auto& n = tree.at(id);
    if (!seen.insert(id).second) {
        throw DslError(DslError::Code::SyntaxError, "node '" + id + "' reached twice while serializing");
    }
    os << std::string(static_cast<std::size_t>(depth) * 2, ' ') << '(';
    if (n.id != path_id(path)) os << n.id << ": ";
    os << bt::to_string(n.kind);
    if (bt::is_leaf(n.kind)) os << ' ' << n.leaf_kind;
    for (const auto& [k, v] : n.params) os << ' ' << k << '=' << quote_if_needed(v);
    for (std::size_t i = 0; i < n.children.size(); ++i) {
        os << '\n';
        path.push_back(i);
        write_node(tree, n.children[i], path, depth + 1, os, seen);
        path.pop_back();
    }
    os << ')';
}

}  // namespace

bt::BehaviorTree parse(std::string_view source) {
    std::string metadata;
    auto tokens = Lexer(source).run(metadata);
    return Parser(std::move(tokens)).run(std::move(metadata));
}

std::string serialize(const bt::BehaviorTree& tree) {
    std::ostringstream os;
    if (!tree.metadata.empty()) {
        std::istringstream lines(tree.metadata);
        std::string line;
        while (std::getline(lines, line)) os << "#| " << line << '\n';
    }
    std::vector<std::size_t> path;
    std::set<bt::NodeId> seen;
    write_node(tree, tree.root, path, 0, os, seen);
    os << '\n';
    return os.str();
}

}  // namespace vrl::dsl
