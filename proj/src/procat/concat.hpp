#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "procat/relations.hpp"

namespace procat {

class EventLog;

struct PlannedPair {
  ConcurrentPair pair;
  double forward = 0.0;   // P(first -> second)
  double backward = 0.0;  // P(second -> first)
  // False when a higher-ranked pair already consumed one of the labels.
  bool merged = false;
  std::string composite;
};

struct ConcatPlan {
  double threshold = 0.0;
  // Valid pairs, score descending, ties by (first, second).
  std::vector<PlannedPair> ordered_pairs;
  // Original label -> composite label, for merged pairs only.
  std::map<std::string, std::string> rename_map;

  bool empty() const noexcept { return rename_map.empty(); }
};

std::string composite_label(const std::string& a, const std::string& b);

ConcatPlan plan_concatenation(const EventLog& log, double p_star);
EventLog apply_concatenation(const EventLog& log, const ConcatPlan& plan);
EventLog preprocess(const EventLog& log, double p_star);

nlohmann::json to_json(const ConcatPlan& plan);

}  // namespace procat
