#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace procat {

class EventLog;

using Count = std::int64_t;

// Directly-follows counts over a sorted label list. start_count/end_count
// record how often a label opens/closes a trace.
class DirectlyFollowsGraph {
 public:
  DirectlyFollowsGraph() = default;
  explicit DirectlyFollowsGraph(std::vector<std::string> labels);

  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::optional<std::size_t> index_of(const std::string& label) const;
  // Throws Errc::UnknownLabel.
  std::size_t require(const std::string& label) const;

  Count follow_count(std::size_t a, std::size_t b) const { return follow_[a * labels_.size() + b]; }
  Count follow_count(const std::string& a, const std::string& b) const;
  Count out_total(std::size_t a) const { return out_total_[a]; }
  Count start_count(std::size_t a) const { return start_[a]; }
  Count end_count(std::size_t a) const { return end_[a]; }
  Count trace_count() const noexcept { return traces_; }

  void add_follow(std::size_t a, std::size_t b, Count n = 1);
  void add_start(std::size_t a, Count n = 1) { start_[a] += n; }
  void add_end(std::size_t a, Count n = 1) { end_[a] += n; }
  void add_traces(Count n) { traces_ += n; }
  // Zeroes a->b and keeps out_total consistent.
  void remove_follow(std::size_t a, std::size_t b);
  void remove_start(std::size_t a) { start_[a] = 0; }
  void remove_end(std::size_t a) { end_[a] = 0; }

  // Adds counts of a DFG over the same label list.
  void merge(const DirectlyFollowsGraph& other);

  bool operator==(const DirectlyFollowsGraph&) const = default;

 private:
  std::vector<std::string> labels_;
  std::vector<Count> follow_;
  std::vector<Count> out_total_;
  std::vector<Count> start_;
  std::vector<Count> end_;
  Count traces_ = 0;
};

struct ConcurrentPair {
  std::string first;
  std::string second;
  double score = 0.0;  // P(first -> second) + P(second -> first)

  bool operator==(const ConcurrentPair&) const = default;
};

DirectlyFollowsGraph build_dfg(const EventLog& log);

// follow_count[a][b] / out_total[a]; 0 when a never occurs in a non-final position.
double follow_probability(const DirectlyFollowsGraph& dfg, const std::string& a, const std::string& b);
double follow_probability(const DirectlyFollowsGraph& dfg, std::size_t a, std::size_t b);

// Unordered pairs observed in both directions, first < second, sorted.
std::vector<ConcurrentPair> concurrent_pairs(const DirectlyFollowsGraph& dfg);
std::set<std::string> self_loop_labels(const DirectlyFollowsGraph& dfg);

nlohmann::json to_json(const DirectlyFollowsGraph& dfg);
std::string to_dot(const DirectlyFollowsGraph& dfg);

}  // namespace procat
