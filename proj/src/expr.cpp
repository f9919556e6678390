#include "cfd/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <utility>
#include <vector>

namespace cfd {

struct Expression::Node {
    enum class Kind { constant, time, state, add, sub, mul, div, pow_op, neg, call1, call2 };
    Kind kind;
    double value = 0.0;           // constant
    int state_index = 0;          // state (1-based)
    double (*fn1)(double) = nullptr;
    std::shared_ptr<const Node> a, b;

    double eval(double t, std::span<const double> x) const {
        switch (kind) {
            case Kind::constant: return value;
            case Kind::time: return t;
            case Kind::state: {
                const std::size_t i = static_cast<std::size_t>(state_index - 1);
                if (i >= x.size())
                    throw DomainError("expression: state component out of range");
                return x[i];
            }
            case Kind::add: return a->eval(t, x) + b->eval(t, x);
            case Kind::sub: return a->eval(t, x) - b->eval(t, x);
            case Kind::mul: return a->eval(t, x) * b->eval(t, x);
            case Kind::div: return a->eval(t, x) / b->eval(t, x);
            case Kind::pow_op: return std::pow(a->eval(t, x), b->eval(t, x));
            case Kind::neg: return -a->eval(t, x);
            case Kind::call1: return fn1(a->eval(t, x));
            case Kind::call2: return std::pow(a->eval(t, x), b->eval(t, x));
        }
        return 0.0;
    }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

NodePtr make(Node&& n) { return std::make_shared<const Node>(std::move(n)); }

class Parser {
  public:
    Parser(std::string_view src, int& max_state) : src_(src), max_state_(max_state) {}

    NodePtr run() {
        NodePtr e = expr();
        skip_ws();
        if (pos_ != src_.size())
            fail("unexpected trailing input");
        return e;
    }

  private:
    [[noreturn]] void fail(const std::string& what) {
        throw ParseError("expression parse error at offset " + std::to_string(pos_) +
                         ": " + what);
    }

    void skip_ws() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
            ++pos_;
    }

    bool consume(char c) {
        skip_ws();
        if (pos_ < src_.size() && src_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos_ < src_.size() ? src_[pos_] : '\0';
    }

    NodePtr expr() {
        NodePtr lhs = term();
        while (true) {
            if (consume('+'))
                lhs = make({Node::Kind::add, 0, 0, nullptr, lhs, term()});
            else if (consume('-'))
                lhs = make({Node::Kind::sub, 0, 0, nullptr, lhs, term()});
            else
                return lhs;
        }
    }

    NodePtr term() {
        NodePtr lhs = unary();
        while (true) {
            if (consume('*'))
                lhs = make({Node::Kind::mul, 0, 0, nullptr, lhs, unary()});
            else if (consume('/'))
                lhs = make({Node::Kind::div, 0, 0, nullptr, lhs, unary()});
            else
                return lhs;
        }
    }

    NodePtr unary() {
        if (consume('-')) return make({Node::Kind::neg, 0, 0, nullptr, unary(), nullptr});
        if (consume('+')) return unary();
        return power();
    }

    NodePtr power() {
        NodePtr base = primary();
        if (consume('^'))
            return make({Node::Kind::pow_op, 0, 0, nullptr, base, unary()});
        return base;
    }

    NodePtr primary() {
        skip_ws();
        if (pos_ >= src_.size()) fail("expected a value");
        const char c = src_[pos_];
        if (c == '(') {
            ++pos_;
            NodePtr e = expr();
            if (!consume(')')) fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        fail(std::string("unexpected character '") + c + "'");
    }

    NodePtr number() {
        const char* begin = src_.data() + pos_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos_ += static_cast<std::size_t>(end - begin);
        return make({Node::Kind::constant, v, 0, nullptr, nullptr, nullptr});
    }

    NodePtr identifier() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
            ++pos_;
        const std::string name(src_.substr(start, pos_ - start));

        if (name == "t") return make({Node::Kind::time, 0, 0, nullptr, nullptr, nullptr});
        if (name == "pi")
            return make({Node::Kind::constant, 3.141592653589793238462643383279502884, 0,
                         nullptr, nullptr, nullptr});
        if (name == "e")
            return make({Node::Kind::constant, 2.718281828459045235360287471352662498, 0,
                         nullptr, nullptr, nullptr});
        if (name.size() >= 2 && name[0] == 'x') {
            bool digits = true;
            for (std::size_t i = 1; i < name.size(); ++i)
                digits = digits && std::isdigit(static_cast<unsigned char>(name[i]));
            if (digits) {
                const int idx = std::atoi(name.c_str() + 1);
                if (idx < 1) fail("state components are numbered from x1");
                max_state_ = std::max(max_state_, idx);
                return make({Node::Kind::state, 0, idx, nullptr, nullptr, nullptr});
            }
        }

        if (name == "pow") {
            if (!consume('(')) fail("expected '(' after pow");
            NodePtr a = expr();
            if (!consume(',')) fail("pow takes two arguments");
            NodePtr b = expr();
            if (!consume(')')) fail("expected ')'");
            return make({Node::Kind::call2, 0, 0, nullptr, a, b});
        }
        double (*fn)(double) = nullptr;
        if (name == "sin") fn = [](double v) { return std::sin(v); };
        else if (name == "cos") fn = [](double v) { return std::cos(v); };
        else if (name == "exp") fn = [](double v) { return std::exp(v); };
        if (fn != nullptr) {
            if (!consume('(')) fail("expected '(' after " + name);
            NodePtr a = expr();
            if (!consume(')')) fail("expected ')'");
            return make({Node::Kind::call1, 0, 0, fn, a, nullptr});
        }
        fail("unknown identifier '" + name + "'");
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    int& max_state_;
};

}  // namespace

Expression Expression::parse(std::string_view src) {
    Expression e;
    e.source_ = std::string(src);
    Parser p(src, e.max_state_index_);
    e.root_ = p.run();
    return e;
}

double Expression::eval(double t) const { return root_->eval(t, {}); }

double Expression::eval(double t, std::span<const double> x) const {
    return root_->eval(t, x);
}

}  // namespace cfd
