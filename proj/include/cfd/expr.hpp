#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>

#include "cfd/errors.hpp"

namespace cfd {

class ParseError : public Error {
  public:
    using Error::Error;
};

/// Small arithmetic expression over the identifier `t` (and optionally the
/// state components x1..xn), with functions sin, cos, exp, pow, the constants
/// pi and e, the operators + - * / ^ and parentheses. Used to define
/// time-dependent matrix entries and nonlinearities in scenario files.
class Expression {
  public:
    static Expression parse(std::string_view src);

    double eval(double t) const;
    double eval(double t, std::span<const double> x) const;

    /// True when the expression references some state component x1..xn.
    bool uses_state() const { return max_state_index_ > 0; }
    /// Largest state index referenced (x3 -> 3), 0 when none.
    int max_state_index() const { return max_state_index_; }

    const std::string& source() const { return source_; }

    struct Node;

  private:
    Expression() = default;
    std::shared_ptr<const Node> root_;
    int max_state_index_ = 0;
    std::string source_;
};

}  // namespace cfd
