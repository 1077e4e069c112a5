#include "procat/relations.hpp"

#include <algorithm>
#include <sstream>

#include "procat/error.hpp"
#include "procat/event_log.hpp"

namespace procat {

DirectlyFollowsGraph::DirectlyFollowsGraph(std::vector<std::string> labels) : labels_(std::move(labels)) {
  std::sort(labels_.begin(), labels_.end());
  labels_.erase(std::unique(labels_.begin(), labels_.end()), labels_.end());
  const std::size_t n = labels_.size();
  follow_.assign(n * n, 0);
  out_total_.assign(n, 0);
  start_.assign(n, 0);
  end_.assign(n, 0);
}

std::optional<std::size_t> DirectlyFollowsGraph::index_of(const std::string& label) const {
  auto it = std::lower_bound(labels_.begin(), labels_.end(), label);
  if (it == labels_.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

std::size_t DirectlyFollowsGraph::require(const std::string& label) const {
  auto i = index_of(label);
  if (!i) throw Error(Errc::UnknownLabel, "label '" + label + "' is not in the graph");
  return *i;
}

Count DirectlyFollowsGraph::follow_count(const std::string& a, const std::string& b) const {
  return follow_count(require(a), require(b));
}

void DirectlyFollowsGraph::add_follow(std::size_t a, std::size_t b, Count n) {
  follow_[a * labels_.size() + b] += n;
  out_total_[a] += n;
}

void DirectlyFollowsGraph::remove_follow(std::size_t a, std::size_t b) {
  auto& c = follow_[a * labels_.size() + b];
  out_total_[a] -= c;
  c = 0;
}

void DirectlyFollowsGraph::merge(const DirectlyFollowsGraph& other) {
  if (other.labels_ != labels_) throw Error(Errc::InvalidArgument, "cannot merge graphs over different labels");
  for (std::size_t i = 0; i < follow_.size(); ++i) follow_[i] += other.follow_[i];
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    out_total_[i] += other.out_total_[i];
    start_[i] += other.start_[i];
    end_[i] += other.end_[i];
  }
  traces_ += other.traces_;
}

DirectlyFollowsGraph build_dfg(const EventLog& log) {
  const auto& universe = log.label_universe();
  DirectlyFollowsGraph dfg(std::vector<std::string>(universe.begin(), universe.end()));
  for (const auto& t : log.traces()) {
    if (t.events.empty()) continue;
    dfg.add_traces(1);
    std::size_t prev = *dfg.index_of(t.events.front().label);
    dfg.add_start(prev);
    for (std::size_t j = 1; j < t.events.size(); ++j) {
      const std::size_t cur = *dfg.index_of(t.events[j].label);
      dfg.add_follow(prev, cur);
      prev = cur;
    }
    dfg.add_end(prev);
  }
  return dfg;
}

double follow_probability(const DirectlyFollowsGraph& dfg, std::size_t a, std::size_t b) {
  const Count total = dfg.out_total(a);
  if (total == 0) return 0.0;
  return static_cast<double>(dfg.follow_count(a, b)) / static_cast<double>(total);
}

double follow_probability(const DirectlyFollowsGraph& dfg, const std::string& a, const std::string& b) {
  return follow_probability(dfg, dfg.require(a), dfg.require(b));
}

std::vector<ConcurrentPair> concurrent_pairs(const DirectlyFollowsGraph& dfg) {
  std::vector<ConcurrentPair> out;
  const std::size_t n = dfg.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (dfg.follow_count(a, b) > 0 && dfg.follow_count(b, a) > 0) {
        out.push_back({dfg.labels()[a], dfg.labels()[b],
                       follow_probability(dfg, a, b) + follow_probability(dfg, b, a)});
      }
    }
  }
  return out;
}

std::set<std::string> self_loop_labels(const DirectlyFollowsGraph& dfg) {
  std::set<std::string> out;
  for (std::size_t a = 0; a < dfg.size(); ++a) {
    if (dfg.follow_count(a, a) > 0) out.insert(dfg.labels()[a]);
  }
  return out;
}

nlohmann::json to_json(const DirectlyFollowsGraph& dfg) {
  nlohmann::json j;
  j["labels"] = dfg.labels();
  nlohmann::json edges = nlohmann::json::object();
  nlohmann::json start = nlohmann::json::object();
  nlohmann::json end = nlohmann::json::object();
  for (std::size_t a = 0; a < dfg.size(); ++a) {
    const auto& la = dfg.labels()[a];
    nlohmann::json row = nlohmann::json::object();
    for (std::size_t b = 0; b < dfg.size(); ++b) {
      if (dfg.follow_count(a, b) > 0) row[dfg.labels()[b]] = dfg.follow_count(a, b);
    }
    edges[la] = row;
    if (dfg.start_count(a) > 0) start[la] = dfg.start_count(a);
    if (dfg.end_count(a) > 0) end[la] = dfg.end_count(a);
  }
  j["edges"] = edges;
  j["start"] = start;
  j["end"] = end;
  j["traces"] = dfg.trace_count();
  return j;
}

std::string to_dot(const DirectlyFollowsGraph& dfg) {
  std::ostringstream out;
  out << "digraph dfg {\n  rankdir=LR;\n  start [shape=circle,label=\"\"];\n  end [shape=doublecircle,label=\"\"];\n";
  for (std::size_t a = 0; a < dfg.size(); ++a) out << "  n" << a << " [shape=box,label=\"" << dfg.labels()[a] << "\"];\n";
  for (std::size_t a = 0; a < dfg.size(); ++a) {
    if (dfg.start_count(a) > 0) out << "  start -> n" << a << " [label=\"" << dfg.start_count(a) << "\"];\n";
    for (std::size_t b = 0; b < dfg.size(); ++b) {
      if (dfg.follow_count(a, b) > 0) {
        out << "  n" << a << " -> n" << b << " [label=\"" << dfg.follow_count(a, b) << "\"];\n";
      }
    }
    if (dfg.end_count(a) > 0) out << "  n" << a << " -> end [label=\"" << dfg.end_count(a) << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace procat
