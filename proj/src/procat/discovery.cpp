#include "procat/discovery.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <tuple>

#include "procat/error.hpp"
#include "procat/event_log.hpp"

namespace procat {

void DiscoveryConfig::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw Error(Errc::InvalidArgument, "eta must lie in [0,1]");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw Error(Errc::InvalidArgument, "epsilon must lie in [0,1]");
}

LabelPair make_label_pair(const std::string& a, const std::string& b) {
  return a < b ? LabelPair{a, b} : LabelPair{b, a};
}

std::set<LabelPair> detect_short_loops(const DirectlyFollowsGraph& dfg, const EventLog& log) {
  (void)dfg;
  std::set<LabelPair> out;
  for (const auto& t : log.traces()) {
    const auto& ev = t.events;
    for (std::size_t j = 0; j + 2 < ev.size(); ++j) {
      if (ev[j].label == ev[j + 2].label && ev[j].label != ev[j + 1].label) {
        out.insert(make_label_pair(ev[j].label, ev[j + 1].label));
      }
    }
  }
  return out;
}

std::set<LabelPair> detect_concurrency(const DirectlyFollowsGraph& dfg, const std::set<LabelPair>& short_loops,
                                       double eta) {
  std::set<LabelPair> out;
  for (std::size_t a = 0; a < dfg.size(); ++a) {
    for (std::size_t b = a + 1; b < dfg.size(); ++b) {
      const Count ab = dfg.follow_count(a, b);
      const Count ba = dfg.follow_count(b, a);
      if (ab <= 0 || ba <= 0) continue;
      LabelPair pair = make_label_pair(dfg.labels()[a], dfg.labels()[b]);
      if (short_loops.count(pair)) continue;
      const double balance = static_cast<double>(std::llabs(ab - ba)) / static_cast<double>(ab + ba);
      if (balance < eta) out.insert(std::move(pair));
    }
  }
  return out;
}

namespace {

std::vector<bool> active_labels(const DirectlyFollowsGraph& dfg) {
  std::vector<bool> active(dfg.size(), false);
  for (std::size_t a = 0; a < dfg.size(); ++a) {
    if (dfg.start_count(a) > 0 || dfg.end_count(a) > 0 || dfg.out_total(a) > 0) active[a] = true;
    for (std::size_t b = 0; b < dfg.size(); ++b) {
      if (dfg.follow_count(a, b) > 0) active[b] = true;
    }
  }
  return active;
}

// Node n = start, n + 1 = end.
bool connected_over(const DirectlyFollowsGraph& dfg, const std::vector<bool>& active) {
  const std::size_t n = dfg.size();
  auto reach = [&](bool forward) {
    std::vector<bool> seen(n + 2, false);
    std::deque<std::size_t> queue{forward ? n : n + 1};
    seen[queue.front()] = true;
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      auto visit = [&](std::size_t v) {
        if (!seen[v]) {
          seen[v] = true;
          queue.push_back(v);
        }
      };
      if (forward) {
        if (u == n) {
          for (std::size_t b = 0; b < n; ++b) {
            if (dfg.start_count(b) > 0) visit(b);
          }
        } else if (u < n) {
          for (std::size_t b = 0; b < n; ++b) {
            if (dfg.follow_count(u, b) > 0) visit(b);
          }
          if (dfg.end_count(u) > 0) visit(n + 1);
        }
      } else {
        if (u == n + 1) {
          for (std::size_t a = 0; a < n; ++a) {
            if (dfg.end_count(a) > 0) visit(a);
          }
        } else if (u < n) {
          for (std::size_t a = 0; a < n; ++a) {
            if (dfg.follow_count(a, u) > 0) visit(a);
          }
          if (dfg.start_count(u) > 0) visit(n);
        }
      }
    }
    return seen;
  };
  const auto fwd = reach(true);
  const auto bwd = reach(false);
  bool any = false;
  for (std::size_t a = 0; a < n; ++a) {
    if (!active[a]) continue;
    any = true;
    if (!fwd[a] || !bwd[a]) return false;
  }
  return !any || (fwd[n + 1] && bwd[n]);
}

}  // namespace

bool is_connected(const DirectlyFollowsGraph& dfg) { return connected_over(dfg, active_labels(dfg)); }

DirectlyFollowsGraph filter_dfg(const DirectlyFollowsGraph& dfg, double epsilon) {
  const std::size_t n = dfg.size();
  const std::vector<bool> active = active_labels(dfg);
  // Edge encoding: source n = start, target n + 1 = end.
  struct Candidate {
    Count count;
    std::size_t from;
    std::size_t to;
  };
  std::vector<Candidate> candidates;
  auto consider = [&](std::size_t from, const std::vector<std::pair<std::size_t, Count>>& out) {
    Count max_count = 0;
    for (const auto& [to, c] : out) max_count = std::max(max_count, c);
    for (const auto& [to, c] : out) {
      if (c > 0 && static_cast<double>(c) < epsilon * static_cast<double>(max_count)) {
        candidates.push_back({c, from, to});
      }
    }
  };
  {
    std::vector<std::pair<std::size_t, Count>> out;
    for (std::size_t b = 0; b < n; ++b) out.emplace_back(b, dfg.start_count(b));
    consider(n, out);
  }
  for (std::size_t a = 0; a < n; ++a) {
    std::vector<std::pair<std::size_t, Count>> out;
    for (std::size_t b = 0; b < n; ++b) out.emplace_back(b, dfg.follow_count(a, b));
    out.emplace_back(n + 1, dfg.end_count(a));
    consider(a, out);
  }
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& x, const Candidate& y) {
    return std::tie(x.count, x.from, x.to) < std::tie(y.count, y.from, y.to);
  });

  DirectlyFollowsGraph out = dfg;
  for (const auto& c : candidates) {
    DirectlyFollowsGraph trial = out;
    if (c.from == n) {
      trial.remove_start(c.to);
    } else if (c.to == n + 1) {
      trial.remove_end(c.from);
    } else {
      trial.remove_follow(c.from, c.to);
    }
    if (connected_over(trial, active)) out = std::move(trial);
  }
  return out;
}

const char* node_kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::Start: return "start";
    case NodeKind::End: return "end";
    case NodeKind::Activity: return "activity";
    case NodeKind::XorSplit: return "xor_split";
    case NodeKind::XorJoin: return "xor_join";
    case NodeKind::AndSplit: return "and_split";
    case NodeKind::AndJoin: return "and_join";
  }
  return "?";
}

GatewayGraph::NodeId GatewayGraph::add_node(NodeKind kind, std::string label) {
  nodes_.push_back({kind, std::move(label)});
  return nodes_.size() - 1;
}

void GatewayGraph::add_edge(NodeId from, NodeId to) {
  if (from >= nodes_.size() || to >= nodes_.size()) throw Error(Errc::InvalidArgument, "edge out of range");
  edges_.emplace_back(from, to);
}

std::vector<GatewayGraph::NodeId> GatewayGraph::successors(NodeId n) const {
  std::vector<NodeId> out;
  for (const auto& [u, v] : edges_) {
    if (u == n) out.push_back(v);
  }
  return out;
}

std::vector<GatewayGraph::NodeId> GatewayGraph::predecessors(NodeId n) const {
  std::vector<NodeId> out;
  for (const auto& [u, v] : edges_) {
    if (v == n) out.push_back(u);
  }
  return out;
}

std::size_t GatewayGraph::count(NodeKind kind) const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [&](const GatewayNode& g) { return g.kind == kind; }));
}

void GatewayGraph::validate() const {
  if (count(NodeKind::Start) != 1 || count(NodeKind::End) != 1) {
    throw Error(Errc::InvalidArgument, "gateway graph needs exactly one start and one end");
  }
  std::vector<std::vector<NodeId>> succ(nodes_.size()), pred(nodes_.size());
  for (const auto& [u, v] : edges_) {
    succ[u].push_back(v);
    pred[v].push_back(u);
  }
  NodeId start = 0, end = 0;
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].kind == NodeKind::Start) start = i;
    if (nodes_[i].kind == NodeKind::End) end = i;
    const bool split = nodes_[i].kind == NodeKind::XorSplit || nodes_[i].kind == NodeKind::AndSplit;
    const bool join = nodes_[i].kind == NodeKind::XorJoin || nodes_[i].kind == NodeKind::AndJoin;
    if (split && succ[i].size() < 2) throw Error(Errc::InvalidArgument, "split with out-degree < 2");
    if (join && pred[i].size() < 2) throw Error(Errc::InvalidArgument, "join with in-degree < 2");
  }
  auto reach = [&](NodeId from, const std::vector<std::vector<NodeId>>& adj) {
    std::vector<bool> seen(nodes_.size(), false);
    std::deque<NodeId> queue{from};
    seen[from] = true;
    while (!queue.empty()) {
      NodeId u = queue.front();
      queue.pop_front();
      for (NodeId v : adj[u]) {
        if (!seen[v]) {
          seen[v] = true;
          queue.push_back(v);
        }
      }
    }
    return seen;
  };
  const auto fwd = reach(start, succ);
  const auto bwd = reach(end, pred);
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    if (!fwd[i] || !bwd[i]) {
      throw Error(Errc::Disconnected, std::string("node ") + node_kind_name(nodes_[i].kind) + " '" +
                                          nodes_[i].label + "' is not on a start-end path");
    }
  }
}

namespace {

// Connected components of `members` under `related` (concurrency or its
// complement), each sorted, in order of first member.
std::vector<std::vector<std::size_t>> components(const std::vector<std::size_t>& members,
                                                 const std::vector<std::vector<bool>>& conc, bool related) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<bool> used(members.size(), false);
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (used[i]) continue;
    std::vector<std::size_t> comp{members[i]};
    used[i] = true;
    for (std::size_t k = 0; k < comp.size(); ++k) {
      for (std::size_t j = 0; j < members.size(); ++j) {
        if (!used[j] && conc[comp[k]][members[j]] == related) {
          used[j] = true;
          comp.push_back(members[j]);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

}  // namespace

GatewayGraph build_gateway_graph(const DirectlyFollowsGraph& filtered, const std::set<LabelPair>& concurrency) {
  const std::size_t n = filtered.size();
  const std::size_t start = n, end = n + 1;
  // Virtual node ids: labels 0..n-1, start n, end n+1. Start/end are never concurrent.
  std::vector<std::vector<bool>> conc(n + 2, std::vector<bool>(n + 2, false));
  for (const auto& [a, b] : concurrency) {
    auto ia = filtered.index_of(a), ib = filtered.index_of(b);
    if (ia && ib) conc[*ia][*ib] = conc[*ib][*ia] = true;
  }
  std::vector<std::vector<std::size_t>> succ(n + 2), pred(n + 2);
  auto link = [&](std::size_t u, std::size_t v) {
    succ[u].push_back(v);
    pred[v].push_back(u);
  };
  for (std::size_t b = 0; b < n; ++b) {
    if (filtered.start_count(b) > 0) link(start, b);
  }
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (filtered.follow_count(a, b) > 0 && !conc[a][b]) link(a, b);
    }
    if (filtered.end_count(a) > 0) link(a, end);
  }

  GatewayGraph g;
  std::vector<std::optional<GatewayGraph::NodeId>> node(n + 2);
  node[start] = g.add_node(NodeKind::Start);
  for (std::size_t a = 0; a < n; ++a) {
    if (!succ[a].empty() || !pred[a].empty()) node[a] = g.add_node(NodeKind::Activity, filtered.labels()[a]);
  }
  node[end] = g.add_node(NodeKind::End);

  // out_port[u][v]: gateway node from which the edge u->v leaves; in_port likewise.
  std::vector<std::map<std::size_t, GatewayGraph::NodeId>> out_port(n + 2), in_port(n + 2);
  auto build_side = [&](std::size_t u, const std::vector<std::size_t>& members, bool split,
                        std::map<std::size_t, GatewayGraph::NodeId>& ports) {
    const GatewayGraph::NodeId self = *node[u];
    if (members.size() == 1) {
      ports[members[0]] = self;
      return;
    }
    const NodeKind and_kind = split ? NodeKind::AndSplit : NodeKind::AndJoin;
    const NodeKind xor_kind = split ? NodeKind::XorSplit : NodeKind::XorJoin;
    auto connect = [&](GatewayGraph::NodeId inner, GatewayGraph::NodeId outer) {
      split ? g.add_edge(outer, inner) : g.add_edge(inner, outer);
    };
    // Non-concurrent groups become XOR branches, mutually concurrent groups
    // AND branches; a group that splits neither way is a flat XOR.
    std::function<void(GatewayGraph::NodeId, const std::vector<std::size_t>&)> decompose =
        [&](GatewayGraph::NodeId outer, const std::vector<std::size_t>& group) {
          if (group.size() == 1) {
            ports[group[0]] = outer;
            return;
          }
          auto parts = components(group, conc, true);
          NodeKind kind = xor_kind;
          if (parts.size() == 1) {
            parts = components(group, conc, false);
            kind = parts.size() > 1 ? and_kind : xor_kind;
            if (parts.size() == 1) {
              parts.clear();
              for (std::size_t m : group) parts.push_back({m});
            }
          }
          const auto gw = g.add_node(kind);
          connect(gw, outer);
          for (const auto& part : parts) decompose(gw, part);
        };
    decompose(self, members);
  };
  for (std::size_t u = 0; u < n + 2; ++u) {
    if (!node[u]) continue;
    if (!succ[u].empty()) build_side(u, succ[u], true, out_port[u]);
    if (!pred[u].empty()) build_side(u, pred[u], false, in_port[u]);
  }
  for (std::size_t u = 0; u < n + 2; ++u) {
    for (std::size_t v : succ[u]) g.add_edge(out_port[u].at(v), in_port[v].at(u));
  }
  g.validate();
  return g;
}

PetriNet to_petri_net(const GatewayGraph& graph) {
  PetriNet net;
  const auto& nodes = graph.nodes();
  auto is_place_like = [&](std::size_t i) {
    const NodeKind k = nodes[i].kind;
    return k == NodeKind::Start || k == NodeKind::End || k == NodeKind::XorSplit || k == NodeKind::XorJoin;
  };
  std::vector<std::size_t> element(nodes.size());
  std::optional<PlaceId> source, sink;
  std::size_t silent = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    switch (nodes[i].kind) {
      case NodeKind::Start:
        element[i] = *(source = net.add_place("src"));
        break;
      case NodeKind::End:
        element[i] = *(sink = net.add_place("sink"));
        break;
      case NodeKind::XorSplit:
      case NodeKind::XorJoin:
        element[i] = net.add_place(std::string(node_kind_name(nodes[i].kind)) + "_" + std::to_string(i));
        break;
      case NodeKind::Activity:
        element[i] = net.add_transition(nodes[i].label, nodes[i].label);
        break;
      case NodeKind::AndSplit:
      case NodeKind::AndJoin:
        element[i] = net.add_transition("tau_" + std::to_string(silent++), std::nullopt);
        break;
    }
  }
  for (const auto& [u, v] : graph.edges()) {
    const bool pu = is_place_like(u), pv = is_place_like(v);
    if (!pu && pv) {
      net.add_output_arc(element[u], element[v]);
    } else if (pu && !pv) {
      net.add_input_arc(element[u], element[v]);
    } else if (!pu && !pv) {
      const PlaceId p = net.add_place("p_" + std::to_string(u) + "_" + std::to_string(v));
      net.add_output_arc(element[u], p);
      net.add_input_arc(p, element[v]);
    } else {
      const TransitionId t = net.add_transition("tau_" + std::to_string(silent++), std::nullopt);
      net.add_input_arc(element[u], t);
      net.add_output_arc(t, element[v]);
    }
  }
  if (!source || !sink) throw Error(Errc::InvalidArgument, "gateway graph lacks start or end");
  Marking init(net.place_count()), fin(net.place_count());
  init[*source] = 1;
  fin[*sink] = 1;
  net.set_initial_marking(init);
  net.set_final_marking(fin);
  net.validate();
  return net;
}

PetriNet discover(const EventLog& log, const DiscoveryConfig& config, DiscoveryTrace* trace) {
  config.validate();
  if (log.empty()) throw Error(Errc::EmptyLog, "cannot discover from an empty log");
  const DirectlyFollowsGraph dfg = build_dfg(log);
  const auto short_loops = detect_short_loops(dfg, log);
  const auto candidates = detect_concurrency(dfg, short_loops, config.eta);

  // Concurrent edges do not carry ordering; drop them unless that disconnects.
  const std::vector<bool> active = active_labels(dfg);
  DirectlyFollowsGraph ordered = dfg;
  std::set<LabelPair> concurrency;
  for (const auto& pair : candidates) {
    DirectlyFollowsGraph trial = ordered;
    const std::size_t a = dfg.require(pair.first), b = dfg.require(pair.second);
    trial.remove_follow(a, b);
    trial.remove_follow(b, a);
    if (connected_over(trial, active)) {
      ordered = std::move(trial);
      concurrency.insert(pair);
    }
  }
  DirectlyFollowsGraph filtered = filter_dfg(ordered, config.epsilon);
  GatewayGraph gateways = build_gateway_graph(filtered, concurrency);
  PetriNet net = to_petri_net(gateways);
  if (trace) {
    trace->short_loops = short_loops;
    trace->concurrency = concurrency;
    trace->filtered = std::move(filtered);
    trace->gateways = std::move(gateways);
  }
  return net;
}

nlohmann::json discovery_metadata(const DiscoveryConfig& config) {
  return {{"eta", config.eta},
          {"epsilon", config.epsilon},
          {"concurrency_test", "|ab-ba|/(ab+ba) < eta, short loops excluded"},
          {"edge_filter", "count(a->b) < epsilon * max_c count(a->c) dropped unless disconnecting"}};
}

}  // namespace procat
