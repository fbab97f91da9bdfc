#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>

#include "hpmdiag/error.hpp"
#include "hpmdiag/perfgroup.hpp"

namespace hpmdiag {

ExprPtr make_number(double value) { return std::make_shared<const Expr>(Expr{NumberLit{value}}); }
ExprPtr make_slot(std::string slot) {
  return std::make_shared<const Expr>(Expr{SlotRef{std::move(slot)}});
}
ExprPtr make_time() { return std::make_shared<const Expr>(Expr{TimeRef{}}); }
ExprPtr make_negate(ExprPtr operand) {
  return std::make_shared<const Expr>(Expr{Negate{std::move(operand)}});
}
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs) {
  return std::make_shared<const Expr>(Expr{Binary{op, std::move(lhs), std::move(rhs)}});
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& lhs) -> bool {
        using T = std::decay_t<decltype(lhs)>;
        const auto& rhs = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, NumberLit>) {
          return lhs.value == rhs.value;
        } else if constexpr (std::is_same_v<T, SlotRef>) {
          return lhs.slot == rhs.slot;
        } else if constexpr (std::is_same_v<T, TimeRef>) {
          return true;
        } else if constexpr (std::is_same_v<T, Negate>) {
          return structurally_equal(*lhs.operand, *rhs.operand);
        } else {
          return lhs.op == rhs.op && structurally_equal(*lhs.lhs, *rhs.lhs) &&
                 structurally_equal(*lhs.rhs, *rhs.rhs);
        }
      },
      a.node);
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

namespace {

int precedence(const Expr& e) {
  if (const auto* b = std::get_if<Binary>(&e.node)) {
    return (b->op == BinaryOp::add || b->op == BinaryOp::sub) ? 1 : 2;
  }
  if (std::holds_alternative<Negate>(e.node)) return 3;
  return 4;
}

char op_char(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return '+';
    case BinaryOp::sub: return '-';
    case BinaryOp::mul: return '*';
    case BinaryOp::div: return '/';
  }
  return '?';
}

std::string format_number(double v) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, v);
  return std::string(buffer, ptr);
}

void print_into(const Expr& e, std::string& out) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, NumberLit>) {
          out += format_number(node.value);
        } else if constexpr (std::is_same_v<T, SlotRef>) {
          out += node.slot;
        } else if constexpr (std::is_same_v<T, TimeRef>) {
          out += "time";
        } else if constexpr (std::is_same_v<T, Negate>) {
          out += '-';
          const bool wrap = precedence(*node.operand) < 3;
          if (wrap) out += '(';
          print_into(*node.operand, out);
          if (wrap) out += ')';
        } else {
          const int p = precedence(e);
          const bool wrap_lhs = precedence(*node.lhs) < p;
          const bool wrap_rhs = precedence(*node.rhs) <= p;
          if (wrap_lhs) out += '(';
          print_into(*node.lhs, out);
          if (wrap_lhs) out += ')';
          out += ' ';
          out += op_char(node.op);
          out += ' ';
          if (wrap_rhs) out += '(';
          print_into(*node.rhs, out);
          if (wrap_rhs) out += ')';
        }
      },
      e.node);
}

}  // namespace

std::string print_expr(const Expr& expr) {
  std::string out;
  print_into(expr, out);
  return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

bool is_ident_start(char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; }
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Recursive descent over one line of text:
//   expr   := term {("+"|"-") term}
//   term   := factor {("*"|"/") factor}
//   factor := NUMBER | SLOT | "time" | "(" expr ")" | "-" factor
class ExprParser {
 public:
  ExprParser(std::string_view text, int line, int column_offset,
             const std::optional<std::vector<std::string>>& slots)
      : text_(text), line_(line), column_offset_(column_offset), slots_(slots) {}

  ExprPtr parse() {
    auto e = expr();
    skip_ws();
    if (pos_ < text_.size()) fail("expected operator or end of line");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& message) const {
    throw SyntaxError(line_, column_offset_ + static_cast<int>(pos_) + 1, message);
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  ExprPtr expr() {
    auto lhs = term();
    while (true) {
      if (accept('+')) {
        lhs = make_binary(BinaryOp::add, lhs, term());
      } else if (accept('-')) {
        lhs = make_binary(BinaryOp::sub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr term() {
    auto lhs = factor();
    while (true) {
      if (accept('*')) {
        lhs = make_binary(BinaryOp::mul, lhs, factor());
      } else if (accept('/')) {
        lhs = make_binary(BinaryOp::div, lhs, factor());
      } else {
        return lhs;
      }
    }
  }

  ExprPtr factor() {
    skip_ws();
    if (pos_ >= text_.size()) fail("expected number, slot, 'time', '(' or '-'");
    const char c = text_[pos_];
    if (c == '-') {
      ++pos_;
      return make_negate(factor());
    }
    if (c == '(') {
      ++pos_;
      auto inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (is_digit(c) || c == '.') return number();
    if (is_ident_start(c)) return identifier();
    fail("expected number, slot, 'time', '(' or '-'");
  }

  ExprPtr number() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      while (pos_ < text_.size() && is_digit(text_[pos_])) ++pos_;
    }
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < text_.size() && (text_[p] == '+' || text_[p] == '-')) ++p;
      if (p >= text_.size() || !is_digit(text_[p])) {
        pos_ = p;
        fail("expected exponent digits");
      }
      while (p < text_.size() && is_digit(text_[p])) ++p;
      pos_ = p;
    }
    const std::string_view literal = text_.substr(start, pos_ - start);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(literal.data(), literal.data() + literal.size(), value);
    if (ec != std::errc() || ptr != literal.data() + literal.size() || !std::isfinite(value)) {
      pos_ = start;
      fail("invalid number literal '" + std::string(literal) + "'");
    }
    return make_number(value);
  }

  ExprPtr identifier() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && is_ident_char(text_[pos_])) ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    if (name == "time") return make_time();
    if (slots_ && std::find(slots_->begin(), slots_->end(), name) == slots_->end()) {
      throw UnknownSlotError(std::to_string(line_) + ":" + std::to_string(column_offset_ + start + 1),
                             name);
    }
    return make_slot(std::move(name));
  }

  std::string_view text_;
  int line_;
  int column_offset_;
  const std::optional<std::vector<std::string>>& slots_;
  std::size_t pos_ = 0;
};

void collect_slots(const Expr& e, std::set<std::string>& out, bool& uses_time) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, SlotRef>) {
          out.insert(node.slot);
        } else if constexpr (std::is_same_v<T, TimeRef>) {
          uses_time = true;
        } else if constexpr (std::is_same_v<T, Negate>) {
          collect_slots(*node.operand, out, uses_time);
        } else if constexpr (std::is_same_v<T, Binary>) {
          collect_slots(*node.lhs, out, uses_time);
          collect_slots(*node.rhs, out, uses_time);
        }
      },
      e.node);
}

}  // namespace

ExprPtr parse_expr(std::string_view text, const std::optional<std::vector<std::string>>& declared_slots) {
  return ExprParser(text, 1, 0, declared_slots).parse();
}

namespace detail {
ExprPtr parse_expr_at(std::string_view text, int line, int column_offset,
                      const std::optional<std::vector<std::string>>& declared_slots) {
  return ExprParser(text, line, column_offset, declared_slots).parse();
}
}  // namespace detail

std::vector<std::string> referenced_slots(const Expr& expr) {
  std::set<std::string> slots;
  bool uses_time = false;
  collect_slots(expr, slots, uses_time);
  return {slots.begin(), slots.end()};
}

bool references_time(const Expr& expr) {
  std::set<std::string> slots;
  bool uses_time = false;
  collect_slots(expr, slots, uses_time);
  return uses_time;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

MetricValue eval(const Expr& e, const SlotBindings& bindings, double time_s) {
  return std::visit(
      [&](const auto& node) -> MetricValue {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, NumberLit>) {
          return MetricValue::of(node.value);
        } else if constexpr (std::is_same_v<T, SlotRef>) {
          const auto it = bindings.find(node.slot);
          if (it == bindings.end()) throw PreconditionError("unbound slot " + node.slot);
          return MetricValue::of(it->second);
        } else if constexpr (std::is_same_v<T, TimeRef>) {
          return MetricValue::of(time_s);
        } else if constexpr (std::is_same_v<T, Negate>) {
          const auto v = eval(*node.operand, bindings, time_s);
          return v.ok() ? MetricValue::of(-v.value()) : v;
        } else {
          const auto lhs = eval(*node.lhs, bindings, time_s);
          const auto rhs = eval(*node.rhs, bindings, time_s);
          if (!lhs.ok()) return lhs;
          if (!rhs.ok()) return rhs;
          switch (node.op) {
            case BinaryOp::add: return MetricValue::of(lhs.value() + rhs.value());
            case BinaryOp::sub: return MetricValue::of(lhs.value() - rhs.value());
            case BinaryOp::mul: return MetricValue::of(lhs.value() * rhs.value());
            case BinaryOp::div:
              if (rhs.value() == 0.0) return MetricValue::undefined();
              return MetricValue::of(lhs.value() / rhs.value());
          }
          return MetricValue::undefined("unknown operator");
        }
      },
      e.node);
}

}  // namespace

MetricValue evaluate_formula(const Expr& expr, const SlotBindings& bindings, double time_s) {
  if (references_time(expr) && !(time_s > 0.0)) {
    throw PreconditionError("formula uses 'time' but time <= 0");
  }
  return eval(expr, bindings, time_s);
}

MetricValue evaluate_formula(const MetricFormula& formula, const SlotBindings& bindings, double time_s) {
  return evaluate_formula(*formula.expression, bindings, time_s);
}

std::string MetricValue::describe() const {
  switch (state_) {
    case State::ok: {
      char buffer[64];
      std::snprintf(buffer, sizeof buffer, "%.6g", value_);
      return buffer;
    }
    case State::undefined: return "undefined";
    case State::not_computable: return "not computable: " + reason_;
  }
  return {};
}

}  // namespace hpmdiag
