#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>

namespace hpmdiag {

// Documented range of one threshold. `permissive` is the bound at which the
// owning detector fires most easily; `restrictive` the opposite bound.
struct ThresholdSpec {
  std::string_view name;
  double default_value;
  double permissive;
  double restrictive;
  std::string_view description;
};

std::span<const ThresholdSpec> threshold_specs();

class Thresholds {
 public:
  Thresholds();  // documented defaults

  double get(std::string_view name) const;
  void set(std::string_view name, double value);  // throws ValidationError for unknown names
  const std::map<std::string, double, std::less<>>& values() const { return values_; }

  // Every detector threshold at its permissive or restrictive bound.
  static Thresholds most_permissive();
  static Thresholds most_restrictive();

  friend bool operator==(const Thresholds&, const Thresholds&) = default;

 private:
  std::map<std::string, double, std::less<>> values_;
};

// JSON object threshold_name -> number; unlisted names keep their defaults.
Thresholds parse_thresholds_json(std::string_view text);
Thresholds load_thresholds(const std::filesystem::path& path);
std::string write_thresholds_json(const Thresholds& thresholds);

}  // namespace hpmdiag
