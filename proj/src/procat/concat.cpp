#include "procat/concat.hpp"

#include <algorithm>
#include <set>

#include "procat/error.hpp"
#include "procat/event_log.hpp"

namespace procat {

std::string composite_label(const std::string& a, const std::string& b) {
  return a < b ? a + "+" + b : b + "+" + a;
}

ConcatPlan plan_concatenation(const EventLog& log, double p_star) {
  if (!(p_star >= 0.0 && p_star <= 1.0)) throw Error(Errc::InvalidArgument, "p* must lie in [0,1]");
  const DirectlyFollowsGraph dfg = build_dfg(log);
  ConcatPlan plan;
  plan.threshold = p_star;
  for (const auto& pair : concurrent_pairs(dfg)) {
    const double fwd = follow_probability(dfg, pair.first, pair.second);
    const double bwd = follow_probability(dfg, pair.second, pair.first);
    if (fwd > p_star && bwd > p_star) {
      plan.ordered_pairs.push_back({pair, fwd, bwd, false, composite_label(pair.first, pair.second)});
    }
  }
  std::stable_sort(plan.ordered_pairs.begin(), plan.ordered_pairs.end(), [](const PlannedPair& x, const PlannedPair& y) {
    if (x.pair.score != y.pair.score) return x.pair.score > y.pair.score;
    if (x.pair.first != y.pair.first) return x.pair.first < y.pair.first;
    return x.pair.second < y.pair.second;
  });
  for (auto& p : plan.ordered_pairs) {
    if (plan.rename_map.count(p.pair.first) || plan.rename_map.count(p.pair.second)) continue;
    if (log.label_universe().count(p.composite)) {
      throw Error(Errc::LabelCollision, "composite label '" + p.composite + "' already exists in the log");
    }
    p.merged = true;
    plan.rename_map[p.pair.first] = p.composite;
    plan.rename_map[p.pair.second] = p.composite;
  }
  return plan;
}

EventLog apply_concatenation(const EventLog& log, const ConcatPlan& plan) {
  for (const auto& [label, composite] : plan.rename_map) {
    if (!log.label_universe().count(label)) {
      throw Error(Errc::PlanLogMismatch, "plan references label '" + label + "' absent from the log");
    }
  }
  std::vector<Trace> traces = log.traces();
  for (auto& t : traces) {
    for (const auto& p : plan.ordered_pairs) {
      if (!p.merged) continue;
      std::vector<EventInstance> out;
      out.reserve(t.events.size());
      const auto& ev = t.events;
      for (std::size_t j = 0; j < ev.size(); ++j) {
        const bool adjacent_pair =
            j + 1 < ev.size() &&
            ((ev[j].label == p.pair.first && ev[j + 1].label == p.pair.second) ||
             (ev[j].label == p.pair.second && ev[j + 1].label == p.pair.first));
        if (adjacent_pair) {
          EventInstance merged = ev[j];
          merged.label = p.composite;
          merged.timestamp = std::min(ev[j].timestamp, ev[j + 1].timestamp);
          for (const auto& [k, v] : ev[j + 1].attributes) merged.attributes.emplace(k, v);
          out.push_back(std::move(merged));
          ++j;
        } else {
          out.push_back(ev[j]);
        }
      }
      t.events = std::move(out);
    }
    for (auto& e : t.events) {
      auto it = plan.rename_map.find(e.label);
      if (it != plan.rename_map.end()) e.label = it->second;
    }
    std::vector<EventInstance> collapsed;
    collapsed.reserve(t.events.size());
    for (auto& e : t.events) {
      if (!collapsed.empty() && collapsed.back().label == e.label) continue;
      collapsed.push_back(std::move(e));
    }
    t.events = std::move(collapsed);
  }
  return EventLog(std::move(traces));
}

EventLog preprocess(const EventLog& log, double p_star) {
  return apply_concatenation(log, plan_concatenation(log, p_star));
}

nlohmann::json to_json(const ConcatPlan& plan) {
  nlohmann::json j;
  j["threshold"] = plan.threshold;
  j["tie_break"] = "lexicographic";
  auto pairs = nlohmann::json::array();
  for (const auto& p : plan.ordered_pairs) {
    pairs.push_back({{"first", p.pair.first},
                     {"second", p.pair.second},
                     {"score", p.pair.score},
                     {"p_forward", p.forward},
                     {"p_backward", p.backward},
                     {"merged", p.merged},
                     {"composite", p.composite}});
  }
  j["pairs"] = pairs;
  j["rename_map"] = plan.rename_map;
  return j;
}

}  // namespace procat
