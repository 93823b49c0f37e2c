#pragma once

// R-style model formulas: parsing, rendering, term algebra and evaluation of
// function-of-variable terms.

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "jointgibbs/error.hpp"

namespace jointgibbs::formula {

class FormulaError : public ConfigError {
 public:
  FormulaError(const std::string& what, std::size_t offset)
      : ConfigError(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Arithmetic expression as used inside function calls, I(...) and the
/// event argument of Surv(...).
struct ArithExpr {
  enum class Kind {
    Number,
    String,
    Variable,
    Negate,
    Add,
    Subtract,
    Multiply,
    Divide,
    Power,
    Call,
    Equal,
    NotEqual,
    Less,
    Greater,
    LessEqual,
    GreaterEqual,
  };
  Kind kind = Kind::Number;
  double number = 0.0;
  std::string text;  // variable name, function name or string literal
  std::vector<ArithExpr> args;

  bool operator==(const ArithExpr&) const = default;
};

/// Node of the formula-algebra tree (right-hand side of `~`).
struct TermNode {
  enum class Kind {
    Variable,  // name
    Call,      // name(args...), including I(...)
    Literal,   // number (0 or 1 for intercept handling)
    Sum,       // a + b
    Remove,    // a - b, or unary -b when children.size() == 1
    Cross,     // a * b
    Colon,     // a:b
    Power,     // (a)^number
  };
  Kind kind = Kind::Literal;
  std::string name;
  double number = 0.0;
  std::vector<ArithExpr> args;
  std::vector<TermNode> children;

  bool operator==(const TermNode&) const = default;
};

struct RandomPart {
  TermNode terms;  // usually Literal 1 or a sum of variables
  std::string group;

  bool operator==(const RandomPart&) const = default;
};

struct ResponseSpec {
  enum class Kind { None, Variable, Survival };
  Kind kind = Kind::None;
  std::string variable;  // plain response or survival time variable
  ArithExpr event;       // survival event expression

  bool operator==(const ResponseSpec&) const = default;
};

struct FormulaAst {
  ResponseSpec response;
  TermNode fixed;
  std::vector<RandomPart> random_parts;
  bool intercept = true;

  bool operator==(const FormulaAst&) const = default;
};

/// One factor of a canonical term: a variable or a function of variables.
struct Factor {
  TermNode leaf;      // Variable or Call
  std::string label;  // canonical rendering, e.g. "I(creat/albu^2)"

  bool operator==(const Factor& o) const { return label == o.label; }
};

/// Canonical term: factors sorted by label and unique.
struct Term {
  std::vector<Factor> factors;

  static Term from_factors(std::vector<Factor> factors);
  std::string name() const;
  std::size_t order() const { return factors.size(); }
  bool operator==(const Term& o) const;
};

struct TermList {
  bool intercept = true;
  std::vector<Term> terms;

  std::vector<std::string> names() const;
};

/// Scalar functions usable in formulas. The builtin set is log, exp, sqrt,
/// abs, sin, cos and the identity I; users may register further unary or
/// n-ary functions before parsing.
class FunctionRegistry {
 public:
  using Fn = std::function<double(std::span<const double>)>;

  FunctionRegistry();
  static const FunctionRegistry& builtin();

  void add(const std::string& name, std::size_t arity, Fn fn);
  bool contains(std::string_view name) const;
  std::size_t arity(std::string_view name) const;
  const Fn& function(std::string_view name) const;

 private:
  struct Entry {
    std::size_t arity;
    Fn fn;
  };
  std::map<std::string, Entry, std::less<>> entries_;
};

struct ParseOptions {
  bool strict = true;            // reject calls to unregistered functions
  bool allow_one_sided = false;  // "~ a + b"
  const FunctionRegistry* functions = nullptr;  // defaults to builtin()
};

FormulaAst parse_formula(std::string_view text, const ParseOptions& options = {});

/// Parses a one-sided random-effects formula such as "~ time | ID".
RandomPart parse_random(std::string_view text, const ParseOptions& options = {});

/// Parses an arithmetic expression on its own (used for event expressions
/// and tests).
ArithExpr parse_arith(std::string_view text, const ParseOptions& options = {});

std::string render(const FormulaAst& ast);
std::string render(const TermNode& node);
std::string render(const ArithExpr& expr);

TermList expand_terms(const TermNode& node);
TermList expand_terms(const FormulaAst& ast);
TermList expand_random_terms(const RandomPart& part);

std::set<std::string> term_dependencies(const Term& term);
std::set<std::string> factor_dependencies(const Factor& factor);
std::set<std::string> expr_dependencies(const ArithExpr& expr);

/// True when the factor is a bare variable (no function applied).
bool is_plain_variable(const Factor& factor);

/// Converts a Variable/Call leaf to the arithmetic expression it computes;
/// I(e) unwraps to e.
ArithExpr leaf_to_expr(const TermNode& leaf);

/// Tree-walking evaluation with string-label support (for event
/// expressions). `number` resolves a variable to its numeric value, `label`
/// to its category label (empty optional when the variable is numeric).
struct EvalContext {
  std::function<double(const std::string&)> number;
  std::function<std::optional<std::string>(const std::string&)> label;
};
double evaluate(const ArithExpr& expr, const EvalContext& ctx,
                const FunctionRegistry& functions = FunctionRegistry::builtin());

/// Numeric expression compiled to a postfix program over variable slots.
class CompiledExpr {
 public:
  CompiledExpr() = default;

  /// `slot_of` maps a variable name to an index into the span passed to
  /// eval(); it should throw for unknown names.
  static CompiledExpr compile(const ArithExpr& expr,
                              const std::function<std::size_t(const std::string&)>& slot_of,
                              const FunctionRegistry& functions = FunctionRegistry::builtin());

  double eval(std::span<const double> slots) const;
  const std::vector<std::size_t>& slots() const { return slots_; }

 private:
  enum class Op { Const, Slot, Neg, Add, Sub, Mul, Div, Pow, Call };
  struct Instr {
    Op op;
    double value = 0.0;
    std::size_t index = 0;
    std::size_t nargs = 0;
  };
  std::vector<Instr> code_;
  std::vector<FunctionRegistry::Fn> fns_;
  std::vector<std::size_t> slots_;
};

}  // namespace jointgibbs::formula
