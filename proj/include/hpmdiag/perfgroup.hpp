#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hpmdiag/metric_value.hpp"
#include "hpmdiag/session.hpp"

namespace hpmdiag {

// ---------------------------------------------------------------------------
// Formula AST
// ---------------------------------------------------------------------------

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

enum class BinaryOp { add, sub, mul, div };

struct NumberLit {
  double value = 0.0;
};
struct SlotRef {
  std::string slot;
};
struct TimeRef {};
struct Negate {
  ExprPtr operand;
};
struct Binary {
  BinaryOp op = BinaryOp::add;
  ExprPtr lhs;
  ExprPtr rhs;
};

struct Expr {
  std::variant<NumberLit, SlotRef, TimeRef, Negate, Binary> node;
};

ExprPtr make_number(double value);
ExprPtr make_slot(std::string slot);
ExprPtr make_time();
ExprPtr make_negate(ExprPtr operand);
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs);

// Structural equality (numbers compared by value).
bool structurally_equal(const Expr& a, const Expr& b);

// Minimal-parenthesis infix text; parse(print(e)) is structurally equal to e.
std::string print_expr(const Expr& expr);

// Parses one expression. `declared_slots` restricts identifiers; pass
// nullopt to accept any identifier as a slot.
ExprPtr parse_expr(std::string_view text,
                   const std::optional<std::vector<std::string>>& declared_slots = std::nullopt);

// Slot names referenced by the expression, sorted and unique.
std::vector<std::string> referenced_slots(const Expr& expr);
bool references_time(const Expr& expr);

// ---------------------------------------------------------------------------
// Groups
// ---------------------------------------------------------------------------

struct EventSetEntry {
  std::string counter_slot;
  std::string event_name;
};

struct MetricFormula {
  std::string metric_name;
  std::string unit;  // optional, free text
  ExprPtr expression;
};

struct PerformanceGroup {
  std::string group_name;
  std::string short_description;
  std::vector<EventSetEntry> event_set;
  std::vector<MetricFormula> metrics;

  const EventSetEntry* find_slot(std::string_view slot) const;
  const MetricFormula* find_metric(std::string_view name) const;
};

// Grammar (one entry per line, `#` comments, blank lines ignored):
//   SHORT <text>
//   EVENTSET
//   <SLOT> <EVENT>
//   METRICS
//   <NAME> [\[unit\]] <expr>
// Throws SyntaxError or UnknownSlotError.
PerformanceGroup parse_group_file(std::string_view text, std::string group_name);
PerformanceGroup load_group_file(const std::filesystem::path& path);

// Inverse of parse_group_file.
std::string print_group(const PerformanceGroup& group);

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

using SlotBindings = std::map<std::string, double, std::less<>>;

// Division by zero and non-finite results yield MetricValue::undefined.
// Throws PreconditionError for an unbound slot or a non-positive `time`
// when the formula uses it.
MetricValue evaluate_formula(const Expr& expr, const SlotBindings& bindings, double time_s);
MetricValue evaluate_formula(const MetricFormula& formula, const SlotBindings& bindings, double time_s);

struct MetricResult {
  std::string metric_name;
  std::string unit;
  std::vector<int> core_ids;
  std::vector<MetricValue> per_core;  // parallel to core_ids
  MetricValue aggregate;              // evaluated on summed bindings
  std::vector<std::string> missing_events;
};

std::vector<MetricResult> evaluate_group(const PerformanceGroup& group, const RegionMeasurement& region);

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

class GroupRegistry {
 public:
  // Replaces an existing group with the same name.
  void add(PerformanceGroup group);
  const PerformanceGroup* find(std::string_view name) const;
  const std::vector<PerformanceGroup>& groups() const { return groups_; }
  std::size_t size() const { return groups_.size(); }

  // Searches every group for a metric name.
  std::optional<std::pair<const PerformanceGroup*, const MetricFormula*>> find_metric(
      std::string_view metric) const;

 private:
  std::vector<PerformanceGroup> groups_;
};

// FLOPS_DP, FLOPS_SP, L3, MEM, CACHE, DATA, CPI.
const GroupRegistry& builtin_groups();
// Source text of a builtin group file, or empty when unknown.
std::string_view builtin_group_source(std::string_view name);

}  // namespace hpmdiag
