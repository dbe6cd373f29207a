// Copyright 2026 The gencon Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Small arithmetic expression language for inline system definitions:
// numbers, coordinate names, + - * / ^, comparisons (yielding 1 or 0),
// parentheses, the constants pi and e, and elementary functions.

#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "gencon/linalg.hpp"

namespace gencon {

class Expression {
public:
    Expression() = default;

    static Expression parse(const std::string& text, const std::vector<std::string>& variables)
    {
        Parser p{text, variables, 0};
        Expression e;
        e.text_ = text;
        e.root_ = p.parse_comparison();
        p.skip_space();
        if (p.pos != text.size())
            p.fail("unexpected '" + std::string(1, text[p.pos]) + "'");
        e.uses_variables_ = e.root_->uses_variables();
        return e;
    }

    double operator()(const Vector& q) const { return root_ ? root_->eval(q) : 0.0; }

    bool uses_variables() const noexcept { return uses_variables_; }
    const std::string& text() const noexcept { return text_; }

private:
    struct Node {
        enum class Kind { Number, Variable, Unary, Binary, Call };
        Kind kind = Kind::Number;
        double value = 0.0;
        int index = 0;
        char op = 0;
        std::string name;
        std::vector<std::shared_ptr<const Node>> args;

        bool uses_variables() const
        {
            if (kind == Kind::Variable)
                return true;
            for (const auto& a : args)
                if (a->uses_variables())
                    return true;
            return false;
        }

        double eval(const Vector& q) const
        {
            switch (kind) {
            case Kind::Number: return value;
            case Kind::Variable: return q(index);
            case Kind::Unary: return -args[0]->eval(q);
            case Kind::Binary: return binary(op, args[0]->eval(q), args[1]->eval(q));
            case Kind::Call: return call(q);
            }
            return 0.0;
        }

        static double binary(char op, double a, double b)
        {
            switch (op) {
            case '+': return a + b;
            case '-': return a - b;
            case '*': return a * b;
            case '/': return a / b;
            case '^': return std::pow(a, b);
            case '<': return a < b ? 1.0 : 0.0;
            case 'l': return a <= b ? 1.0 : 0.0;
            case '>': return a > b ? 1.0 : 0.0;
            case 'g': return a >= b ? 1.0 : 0.0;
            case '=': return a == b ? 1.0 : 0.0;
            case '!': return a != b ? 1.0 : 0.0;
            }
            return 0.0;
        }

        double call(const Vector& q) const
        {
            const double a = args[0]->eval(q);
            if (args.size() == 2) {
                const double b = args[1]->eval(q);
                if (name == "atan2") return std::atan2(a, b);
                if (name == "min") return std::min(a, b);
                if (name == "max") return std::max(a, b);
                if (name == "pow") return std::pow(a, b);
            }
            if (name == "sin") return std::sin(a);
            if (name == "cos") return std::cos(a);
            if (name == "tan") return std::tan(a);
            if (name == "asin") return std::asin(a);
            if (name == "acos") return std::acos(a);
            if (name == "atan") return std::atan(a);
            if (name == "sinh") return std::sinh(a);
            if (name == "cosh") return std::cosh(a);
            if (name == "tanh") return std::tanh(a);
            if (name == "exp") return std::exp(a);
            if (name == "log") return std::log(a);
            if (name == "sqrt") return std::sqrt(a);
            if (name == "abs") return std::abs(a);
            return 0.0;
        }
    };
    using NodePtr = std::shared_ptr<const Node>;

    static int arity(const std::string& f)
    {
        static const char* unary[] = {"sin", "cos", "tan", "asin", "acos", "atan", "sinh",
                                      "cosh", "tanh", "exp", "log", "sqrt", "abs"};
        static const char* binary[] = {"atan2", "min", "max", "pow"};
        for (const char* u : unary)
            if (f == u)
                return 1;
        for (const char* b : binary)
            if (f == b)
                return 2;
        return 0;
    }

    struct Parser {
        const std::string& s;
        const std::vector<std::string>& vars;
        std::size_t pos;

        [[noreturn]] void fail(const std::string& msg) const
        {
            throw InputError("expression '" + s + "' at column " + std::to_string(pos + 1) + ": " + msg);
        }

        void skip_space()
        {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
                ++pos;
        }

        bool accept(const char* tok)
        {
            skip_space();
            const std::string t(tok);
            if (s.compare(pos, t.size(), t) == 0) {
                pos += t.size();
                return true;
            }
            return false;
        }

        static NodePtr binary(char op, NodePtr a, NodePtr b)
        {
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Binary;
            n->op = op;
            n->args = {std::move(a), std::move(b)};
            return n;
        }

        NodePtr parse_comparison()
        {
            NodePtr lhs = parse_sum();
            static const std::pair<const char*, char> ops[] = {{"<=", 'l'}, {">=", 'g'}, {"==", '='},
                                                               {"!=", '!'}, {"<", '<'},  {">", '>'}};
            for (const auto& [tok, code] : ops)
                if (accept(tok))
                    return binary(code, lhs, parse_sum());
            return lhs;
        }

        NodePtr parse_sum()
        {
            NodePtr lhs = parse_product();
            for (;;) {
                if (accept("+"))
                    lhs = binary('+', lhs, parse_product());
                else if (accept("-"))
                    lhs = binary('-', lhs, parse_product());
                else
                    return lhs;
            }
        }

        NodePtr parse_product()
        {
            NodePtr lhs = parse_unary();
            for (;;) {
                if (accept("*"))
                    lhs = binary('*', lhs, parse_unary());
                else if (accept("/"))
                    lhs = binary('/', lhs, parse_unary());
                else
                    return lhs;
            }
        }

        NodePtr parse_unary()
        {
            if (accept("-")) {
                auto n = std::make_shared<Node>();
                n->kind = Node::Kind::Unary;
                n->args = {parse_unary()};
                return n;
            }
            if (accept("+"))
                return parse_unary();
            return parse_power();
        }

        NodePtr parse_power()
        {
            NodePtr base = parse_primary();
            if (accept("^"))
                return binary('^', base, parse_unary());
            return base;
        }

        NodePtr parse_primary()
        {
            skip_space();
            if (pos >= s.size())
                fail("unexpected end of input");
            if (accept("(")) {
                NodePtr e = parse_comparison();
                if (!accept(")"))
                    fail("expected ')'");
                return e;
            }
            const char c = s[pos];
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(s.substr(pos), &used);
                } catch (const std::exception&) {
                    fail("malformed number");
                }
                pos += used;
                auto n = std::make_shared<Node>();
                n->value = v;
                return n;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                const std::size_t start = pos;
                while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
                    ++pos;
                const std::string name = s.substr(start, pos - start);
                if (accept("(")) {
                    const int n_args = arity(name);
                    if (n_args == 0)
                        fail("unknown function '" + name + "'");
                    auto n = std::make_shared<Node>();
                    n->kind = Node::Kind::Call;
                    n->name = name;
                    n->args.push_back(parse_comparison());
                    for (int k = 1; k < n_args; ++k) {
                        if (!accept(","))
                            fail("function '" + name + "' takes " + std::to_string(n_args) + " arguments");
                        n->args.push_back(parse_comparison());
                    }
                    if (!accept(")"))
                        fail("expected ')'");
                    return n;
                }
                for (std::size_t i = 0; i < vars.size(); ++i) {
                    if (vars[i] == name) {
                        auto n = std::make_shared<Node>();
                        n->kind = Node::Kind::Variable;
                        n->index = static_cast<int>(i);
                        return n;
                    }
                }
                auto n = std::make_shared<Node>();
                if (name == "pi")
                    n->value = 3.14159265358979323846;
                else if (name == "e")
                    n->value = 2.71828182845904523536;
                else
                    fail("unknown name '" + name + "'");
                return n;
            }
            fail("unexpected '" + std::string(1, c) + "'");
        }
    };

    std::string text_;
    NodePtr root_;
    bool uses_variables_ = false;
};

} // namespace gencon
