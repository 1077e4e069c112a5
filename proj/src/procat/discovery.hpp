#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "procat/petri.hpp"
#include "procat/relations.hpp"

namespace procat {

class EventLog;

struct DiscoveryConfig {
  double eta = 0.4;      // concurrency balance threshold
  double epsilon = 0.1;  // relative-frequency edge filter

  void validate() const;
};

// Unordered label pair stored with first < second.
using LabelPair = std::pair<std::string, std::string>;
LabelPair make_label_pair(const std::string& a, const std::string& b);

// Pairs witnessed by a pattern a,b,a inside some trace.
std::set<LabelPair> detect_short_loops(const DirectlyFollowsGraph& dfg, const EventLog& log);

// |a->b|>0, |b->a|>0, not a short loop, and
// ||a->b| - |b->a|| / (|a->b| + |b->a|) < eta.
std::set<LabelPair> detect_concurrency(const DirectlyFollowsGraph& dfg, const std::set<LabelPair>& short_loops,
                                       double eta);

// True when every label with an edge is reachable from the virtual start and
// reaches the virtual end.
bool is_connected(const DirectlyFollowsGraph& dfg);

// Drops a->b when count(a->b) < epsilon * max_c count(a->c) (start and end
// edges included), unless the drop would disconnect the graph.
DirectlyFollowsGraph filter_dfg(const DirectlyFollowsGraph& dfg, double epsilon);

enum class NodeKind { Start, End, Activity, XorSplit, XorJoin, AndSplit, AndJoin };
const char* node_kind_name(NodeKind kind);

struct GatewayNode {
  NodeKind kind;
  std::string label;  // activities only
};

class GatewayGraph {
 public:
  using NodeId = std::size_t;

  NodeId add_node(NodeKind kind, std::string label = {});
  void add_edge(NodeId from, NodeId to);

  const std::vector<GatewayNode>& nodes() const noexcept { return nodes_; }
  const std::vector<std::pair<NodeId, NodeId>>& edges() const noexcept { return edges_; }
  std::vector<NodeId> successors(NodeId n) const;
  std::vector<NodeId> predecessors(NodeId n) const;
  std::size_t count(NodeKind kind) const;

  // Throws Errc::Disconnected or Errc::InvalidArgument.
  void validate() const;

 private:
  std::vector<GatewayNode> nodes_;
  std::vector<std::pair<NodeId, NodeId>> edges_;
};

// Edges between concurrent labels in `filtered` are ignored; successors and
// predecessors are grouped into AND blocks (concurrency components) under an
// XOR gateway.
GatewayGraph build_gateway_graph(const DirectlyFollowsGraph& filtered, const std::set<LabelPair>& concurrency);

PetriNet to_petri_net(const GatewayGraph& graph);

struct DiscoveryTrace {
  std::set<LabelPair> short_loops;
  std::set<LabelPair> concurrency;  // after connectivity repair
  DirectlyFollowsGraph filtered;
  GatewayGraph gateways;
};

PetriNet discover(const EventLog& log, const DiscoveryConfig& config = {}, DiscoveryTrace* trace = nullptr);

nlohmann::json discovery_metadata(const DiscoveryConfig& config);

}  // namespace procat
