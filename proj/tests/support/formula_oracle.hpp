#pragma once

// Brute-force formula generator and interpreter, independent of the library
// parser and evaluator.

#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace formula_oracle {

// Random formula text plus a reference value computed straight from the
// generator's own tree, without touching the library parser or evaluator.
struct Node {
  enum Kind { num, slot, time, neg, add, sub, mul, div } kind;
  double value = 0.0;
  std::string name;
  std::unique_ptr<Node> l, r;
};

inline const std::vector<std::string> kSlots{"PMC0", "PMC1", "PMC2", "FIXC0"};

inline std::unique_ptr<Node> random_tree(std::mt19937_64& rng, int depth) {
  auto n = std::make_unique<Node>();
  std::uniform_int_distribution<int> leaf(0, 2);
  std::uniform_int_distribution<int> inner(3, 7);
  const bool make_leaf = depth == 0 || std::uniform_int_distribution<int>(0, 3)(rng) == 0;
  n->kind = static_cast<Node::Kind>(make_leaf ? leaf(rng) : inner(rng));
  switch (n->kind) {
    case Node::num: n->value = std::uniform_int_distribution<int>(0, 40)(rng) / 4.0; break;
    case Node::slot: n->name = kSlots[std::uniform_int_distribution<std::size_t>(0, kSlots.size() - 1)(rng)]; break;
    case Node::time: break;
    case Node::neg: n->l = random_tree(rng, depth - 1); break;
    default:
      n->l = random_tree(rng, depth - 1);
      n->r = random_tree(rng, depth - 1);
  }
  return n;
}

// Fully parenthesized so the text fixes the tree shape.
inline std::string text_of(const Node& n) {
  switch (n.kind) {
    case Node::num: {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", n.value);
      return buf;
    }
    case Node::slot: return n.name;
    case Node::time: return "time";
    case Node::neg: return "-(" + text_of(*n.l) + ")";
    default: break;
  }
  const char* op = n.kind == Node::add ? "+" : n.kind == Node::sub ? "-" : n.kind == Node::mul ? "*" : "/";
  return "(" + text_of(*n.l) + ")" + op + "(" + text_of(*n.r) + ")";
}

// nullopt: the expression divides by zero somewhere.
inline std::optional<double> reference(const Node& n, const std::map<std::string, double>& env, double t) {
  switch (n.kind) {
    case Node::num: return n.value;
    case Node::slot: return env.at(n.name);
    case Node::time: return t;
    case Node::neg: {
      auto v = reference(*n.l, env, t);
      if (!v) return v;
      return -*v;
    }
    default: break;
  }
  const auto a = reference(*n.l, env, t);
  const auto b = reference(*n.r, env, t);
  if (!a || !b) return std::nullopt;
  switch (n.kind) {
    case Node::add: return *a + *b;
    case Node::sub: return *a - *b;
    case Node::mul: return *a * *b;
    default:
      if (*b == 0.0) return std::nullopt;
      return *a / *b;
  }
}

}  // namespace formula_oracle
