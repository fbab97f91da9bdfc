#include <algorithm>
#include <set>

#include "hpmdiag/error.hpp"
#include "hpmdiag/perfgroup.hpp"
#include "json_util.hpp"

namespace hpmdiag {

namespace detail {
ExprPtr parse_expr_at(std::string_view text, int line, int column_offset,
                      const std::optional<std::vector<std::string>>& declared_slots);
}

const EventSetEntry* PerformanceGroup::find_slot(std::string_view slot) const {
  for (const auto& e : event_set) {
    if (e.counter_slot == slot) return &e;
  }
  return nullptr;
}

const MetricFormula* PerformanceGroup::find_metric(std::string_view name) const {
  for (const auto& m : metrics) {
    if (m.metric_name == name) return &m;
  }
  return nullptr;
}

namespace {

struct Line {
  int number;
  std::string_view text;  // comment stripped, not trimmed
};

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

// Index of the first non-space character at or after `from`.
std::size_t skip_spaces(std::string_view s, std::size_t from) {
  while (from < s.size() && is_space(s[from])) ++from;
  return from;
}

std::size_t token_end(std::string_view s, std::size_t from) {
  while (from < s.size() && !is_space(s[from])) ++from;
  return from;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  const auto start_ok = [](char c) { return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || c == '_'; };
  if (!start_ok(s.front())) return false;
  return std::all_of(s.begin(), s.end(), [&](char c) { return start_ok(c) || (c >= '0' && c <= '9'); });
}

std::vector<Line> significant_lines(std::string_view text) {
  std::vector<Line> lines;
  int number = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    std::string_view raw = text.substr(pos, eol == std::string_view::npos ? text.npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++number;
    if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
    if (skip_spaces(raw, 0) == raw.size()) continue;
    lines.push_back({number, raw});
  }
  return lines;
}

}  // namespace

PerformanceGroup parse_group_file(std::string_view text, std::string group_name) {
  PerformanceGroup group;
  group.group_name = std::move(group_name);
  const auto lines = significant_lines(text);
  std::size_t i = 0;
  const int eof_line = lines.empty() ? 1 : lines.back().number + 1;

  const auto keyword = [](const Line& line) {
    const auto start = skip_spaces(line.text, 0);
    return line.text.substr(start, token_end(line.text, start) - start);
  };
  const auto expect_keyword = [&](std::string_view word) {
    if (i >= lines.size()) throw SyntaxError(eof_line, 1, "expected '" + std::string(word) + "'");
    const auto& line = lines[i];
    const auto start = skip_spaces(line.text, 0);
    if (keyword(line) != word || skip_spaces(line.text, start + word.size()) != line.text.size()) {
      throw SyntaxError(line.number, static_cast<int>(start) + 1, "expected '" + std::string(word) + "'");
    }
    ++i;
  };

  // SHORT <text>
  if (i >= lines.size() || keyword(lines[i]) != "SHORT") {
    const int at = i < lines.size() ? lines[i].number : eof_line;
    throw SyntaxError(at, 1, "expected 'SHORT'");
  }
  {
    const auto& line = lines[i];
    const auto start = skip_spaces(line.text, skip_spaces(line.text, 0) + 5);
    std::string_view desc = line.text.substr(start);
    while (!desc.empty() && is_space(desc.back())) desc.remove_suffix(1);
    group.short_description = std::string(desc);
    ++i;
  }

  expect_keyword("EVENTSET");
  std::vector<std::string> slots;
  while (i < lines.size() && keyword(lines[i]) != "METRICS") {
    const auto& line = lines[i];
    const auto slot_start = skip_spaces(line.text, 0);
    const auto slot_end = token_end(line.text, slot_start);
    const auto slot = line.text.substr(slot_start, slot_end - slot_start);
    if (!is_identifier(slot) || slot == "time") {
      throw SyntaxError(line.number, static_cast<int>(slot_start) + 1, "expected counter slot name");
    }
    const auto event_start = skip_spaces(line.text, slot_end);
    const auto event_end = token_end(line.text, event_start);
    const auto event = line.text.substr(event_start, event_end - event_start);
    if (event.empty()) throw SyntaxError(line.number, static_cast<int>(event_start) + 1, "expected event name");
    if (!is_canonical_event_name(event)) {
      throw SyntaxError(line.number, static_cast<int>(event_start) + 1,
                        "event name must match [A-Z][A-Z0-9_]*");
    }
    if (skip_spaces(line.text, event_end) != line.text.size()) {
      throw SyntaxError(line.number, static_cast<int>(skip_spaces(line.text, event_end)) + 1,
                        "expected end of line");
    }
    if (std::find(slots.begin(), slots.end(), slot) != slots.end()) {
      throw SyntaxError(line.number, static_cast<int>(slot_start) + 1,
                        "duplicate counter slot " + std::string(slot));
    }
    slots.emplace_back(slot);
    group.event_set.push_back({std::string(slot), std::string(event)});
    ++i;
  }

  expect_keyword("METRICS");
  const std::optional<std::vector<std::string>> declared(slots);
  for (; i < lines.size(); ++i) {
    const auto& line = lines[i];
    const auto name_start = skip_spaces(line.text, 0);
    const auto name_end = token_end(line.text, name_start);
    const auto name = line.text.substr(name_start, name_end - name_start);
    if (!is_identifier(name)) {
      throw SyntaxError(line.number, static_cast<int>(name_start) + 1, "expected metric name");
    }
    if (group.find_metric(name) != nullptr) {
      throw SyntaxError(line.number, static_cast<int>(name_start) + 1,
                        "duplicate metric " + std::string(name));
    }
    MetricFormula metric;
    metric.metric_name = std::string(name);
    auto expr_start = skip_spaces(line.text, name_end);
    if (expr_start == name_end && expr_start < line.text.size()) {
      throw SyntaxError(line.number, static_cast<int>(expr_start) + 1, "expected whitespace");
    }
    if (expr_start < line.text.size() && line.text[expr_start] == '[') {
      const auto close = line.text.find(']', expr_start);
      if (close == std::string_view::npos) {
        throw SyntaxError(line.number, static_cast<int>(line.text.size()) + 1, "expected ']'");
      }
      metric.unit = std::string(line.text.substr(expr_start + 1, close - expr_start - 1));
      expr_start = skip_spaces(line.text, close + 1);
    }
    std::string_view expr_text = line.text.substr(expr_start);
    while (!expr_text.empty() && is_space(expr_text.back())) expr_text.remove_suffix(1);
    metric.expression =
        detail::parse_expr_at(expr_text, line.number, static_cast<int>(expr_start), declared);
    group.metrics.push_back(std::move(metric));
  }
  if (group.metrics.empty()) throw SyntaxError(eof_line, 1, "expected at least one metric line");
  return group;
}

PerformanceGroup load_group_file(const std::filesystem::path& path) {
  const std::string text = detail::read_text_file(path);
  try {
    return parse_group_file(text, path.stem().string());
  } catch (const UnknownSlotError& e) {
    throw UnknownSlotError(path.string() + ":" + e.context(), e.slot());
  } catch (const SyntaxError& e) {
    throw ParseError(path.string() + ":" + e.context(), e.message());
  }
}

std::string print_group(const PerformanceGroup& group) {
  std::string out = "SHORT " + group.short_description + "\n\nEVENTSET\n";
  for (const auto& e : group.event_set) out += e.counter_slot + " " + e.event_name + "\n";
  out += "\nMETRICS\n";
  for (const auto& m : group.metrics) {
    out += m.metric_name;
    if (!m.unit.empty()) out += " [" + m.unit + "]";
    out += " " + print_expr(*m.expression) + "\n";
  }
  return out;
}

std::vector<MetricResult> evaluate_group(const PerformanceGroup& group, const RegionMeasurement& region) {
  std::vector<MetricResult> results;
  for (const auto& metric : group.metrics) {
    MetricResult result;
    result.metric_name = metric.metric_name;
    result.unit = metric.unit;
    result.core_ids = region.core_ids();

    const auto slots = referenced_slots(*metric.expression);
    std::set<std::string> missing;
    for (const auto& slot : slots) {
      const auto* entry = group.find_slot(slot);
      if (entry == nullptr || !region.has_event(entry->event_name)) {
        missing.insert(entry == nullptr ? slot : entry->event_name);
      }
    }
    if (!missing.empty()) {
      result.missing_events.assign(missing.begin(), missing.end());
      std::string reason = "missing";
      for (const auto& m : result.missing_events) reason += " " + m;
      const auto marker = MetricValue::not_computable(reason);
      result.per_core.assign(region.cores.size(), marker);
      result.aggregate = marker;
      results.push_back(std::move(result));
      continue;
    }

    SlotBindings summed;
    for (const auto& slot : slots) summed[slot] = 0.0;
    for (const auto& core : region.cores) {
      SlotBindings bindings;
      for (const auto& slot : slots) {
        const auto value = static_cast<double>(core.counts.at(group.find_slot(slot)->event_name));
        bindings[slot] = value;
        summed[slot] += value;
      }
      result.per_core.push_back(evaluate_formula(metric, bindings, region.wall_time_s));
    }
    result.aggregate = evaluate_formula(metric, summed, region.wall_time_s);
    results.push_back(std::move(result));
  }
  return results;
}

void GroupRegistry::add(PerformanceGroup group) {
  for (auto& existing : groups_) {
    if (existing.group_name == group.group_name) {
      existing = std::move(group);
      return;
    }
  }
  groups_.push_back(std::move(group));
}

const PerformanceGroup* GroupRegistry::find(std::string_view name) const {
  for (const auto& g : groups_) {
    if (g.group_name == name) return &g;
  }
  return nullptr;
}

std::optional<std::pair<const PerformanceGroup*, const MetricFormula*>> GroupRegistry::find_metric(
    std::string_view metric) const {
  for (const auto& g : groups_) {
    if (const auto* m = g.find_metric(metric)) return std::make_pair(&g, m);
  }
  return std::nullopt;
}

}  // namespace hpmdiag
