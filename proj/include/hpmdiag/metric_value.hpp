#pragma once

#include <cmath>
#include <string>
#include <utility>

namespace hpmdiag {

// A derived number that may be missing. `undefined` covers arithmetic
// failures (x/0, overflow); `not_computable` covers missing input events.
class MetricValue {
 public:
  enum class State { ok, undefined, not_computable };

  MetricValue() : state_(State::not_computable) {}

  static MetricValue of(double v) {
    if (!std::isfinite(v)) return undefined("non-finite result");
    MetricValue m;
    m.state_ = State::ok;
    m.value_ = v;
    return m;
  }
  static MetricValue undefined(std::string why = "division by zero") {
    MetricValue m;
    m.state_ = State::undefined;
    m.reason_ = std::move(why);
    return m;
  }
  static MetricValue not_computable(std::string why) {
    MetricValue m;
    m.state_ = State::not_computable;
    m.reason_ = std::move(why);
    return m;
  }

  bool ok() const noexcept { return state_ == State::ok; }
  State state() const noexcept { return state_; }
  double value() const noexcept { return value_; }
  double value_or(double fallback) const noexcept { return ok() ? value_ : fallback; }
  const std::string& reason() const noexcept { return reason_; }

  // "undefined" / "not computable: <reason>" / the number.
  std::string describe() const;

  friend bool operator==(const MetricValue&, const MetricValue&) = default;

 private:
  State state_;
  double value_ = 0.0;
  std::string reason_;
};

}  // namespace hpmdiag
