#include "procat/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <numeric>
#include <queue>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <boost/math/distributions/normal.hpp>

#include "procat/discovery.hpp"
#include "procat/error.hpp"
#include "procat/event_log.hpp"

namespace procat {

namespace {

struct StateKey {
  std::size_t pos;
  Marking marking;
  bool operator==(const StateKey&) const = default;
};

struct StateKeyHash {
  std::size_t operator()(const StateKey& k) const noexcept {
    return MarkingHash{}(k.marking) ^ (k.pos * 0x9e3779b97f4a7c15ULL);
  }
};

}  // namespace

Alignment align(const PetriNet& net, const std::vector<std::string>& labels, const AlignmentOptions& options) {
  struct Node {
    std::size_t pos;
    Marking marking;
    double cost;
    std::size_t parent;
    MoveKind kind;
    std::optional<TransitionId> transition;
  };
  using Entry = std::tuple<double, std::size_t, std::size_t>;  // cost, seq, node
  std::vector<Node> nodes;
  std::unordered_map<StateKey, std::size_t, StateKeyHash> best;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::size_t seq = 0;

  auto push = [&](std::size_t pos, Marking m, double cost, std::size_t parent, MoveKind kind,
                  std::optional<TransitionId> t) {
    StateKey key{pos, m};
    auto it = best.find(key);
    if (it != best.end() && nodes[it->second].cost <= cost) return;
    nodes.push_back({pos, std::move(m), cost, parent, kind, t});
    const std::size_t id = nodes.size() - 1;
    if (it != best.end()) {
      it->second = id;
    } else {
      best.emplace(std::move(key), id);
      if (best.size() > options.max_states) {
        throw Error(Errc::SearchBudgetExceeded, "alignment search exceeded " + std::to_string(options.max_states) + " states");
      }
    }
    open.emplace(cost, seq++, id);
  };

  const std::size_t n = labels.size();
  const Marking& target = net.final_marking();
  push(0, net.initial_marking(), 0.0, 0, MoveKind::Silent, std::nullopt);
  std::unordered_set<StateKey, StateKeyHash> closed;
  std::size_t expanded = 0;
  while (!open.empty()) {
    auto [cost, s, id] = open.top();
    open.pop();
    StateKey key{nodes[id].pos, nodes[id].marking};
    if (best.at(key) != id || closed.count(key)) continue;
    closed.insert(key);
    ++expanded;
    const std::size_t pos = nodes[id].pos;
    if (pos == n && nodes[id].marking == target) {
      Alignment result;
      result.cost = cost;
      result.states_expanded = expanded;
      for (std::size_t cur = id; cur != 0; cur = nodes[cur].parent) {
        const Node& node = nodes[cur];
        const Node& prev = nodes[node.parent];
        result.moves.push_back({node.kind, node.transition, prev.pos, prev.marking});
      }
      std::reverse(result.moves.begin(), result.moves.end());
      return result;
    }
    const Marking m = nodes[id].marking;
    for (TransitionId t = 0; t < net.transition_count(); ++t) {
      if (!is_enabled(net, m, t)) continue;
      const auto& tr = net.transition(t);
      Marking next = fire(net, m, t);
      if (tr.silent()) {
        push(pos, std::move(next), cost, id, MoveKind::Silent, t);
        continue;
      }
      if (pos < n && *tr.label == labels[pos]) push(pos + 1, next, cost, id, MoveKind::Sync, t);
      push(pos, std::move(next), cost + 1.0, id, MoveKind::Model, t);
    }
    if (pos < n) push(pos + 1, m, cost + 1.0, id, MoveKind::Log, std::nullopt);
  }
  throw Error(Errc::SearchBudgetExceeded, "final marking is unreachable");
}

std::size_t cheapest_model_path(const PetriNet& net, const AlignmentOptions& options) {
  return static_cast<std::size_t>(align(net, {}, options).cost);
}

double token_replay_fitness(const PetriNet& net, const std::vector<std::string>& labels) {
  Trace t;
  for (const auto& l : labels) t.events.push_back({l, 0, {}});
  const ReplayResult r = replay_trace(net, t);
  double missing = static_cast<double>(r.missing_tokens);
  for (PlaceId p = 0; p < net.place_count(); ++p) {
    const int lack = net.final_marking()[p] - r.final_marking[p];
    if (lack > 0) missing += lack;
  }
  const double produced = static_cast<double>(r.produced_tokens + net.initial_marking().total());
  const double consumed = static_cast<double>(r.consumed_tokens + net.final_marking().total());
  const double remaining = static_cast<double>(r.remaining_tokens);
  const double f = 0.5 * (1.0 - (consumed > 0 ? missing / consumed : 0.0)) +
                   0.5 * (1.0 - (produced > 0 ? remaining / produced : 0.0));
  return std::clamp(f, 0.0, 1.0);
}

double f_measure(double fitness, double precision) {
  if (fitness + precision <= 0.0) return 0.0;
  return 2.0 * fitness * precision / (fitness + precision);
}

namespace {

struct Variant {
  std::vector<std::string> labels;
  std::size_t weight = 0;
};

std::vector<Variant> variants_of(const EventLog& log) {
  std::map<std::vector<std::string>, std::size_t> counts;
  std::vector<std::vector<std::string>> order;
  for (const auto& t : log.traces()) {
    std::vector<std::string> labels;
    labels.reserve(t.events.size());
    for (const auto& e : t.events) labels.push_back(e.label);
    auto [it, inserted] = counts.emplace(labels, 0);
    if (inserted) order.push_back(labels);
    ++it->second;
  }
  // Sorted by sequence so results do not depend on trace order.
  std::sort(order.begin(), order.end());
  std::vector<Variant> out;
  for (auto& labels : order) {
    const std::size_t w = counts[labels];
    out.push_back({std::move(labels), w});
  }
  return out;
}

// Visible labels enabled after any silent firing sequence; "" stands for
// completion (final marking reachable silently).
std::set<std::string> enabled_continuations(const PetriNet& net, const Marking& start, std::size_t cap) {
  std::set<std::string> out;
  std::unordered_set<Marking, MarkingHash> seen{start};
  std::deque<Marking> queue{start};
  while (!queue.empty()) {
    Marking m = std::move(queue.front());
    queue.pop_front();
    if (m == net.final_marking()) out.insert("");
    for (TransitionId t = 0; t < net.transition_count(); ++t) {
      if (!is_enabled(net, m, t)) continue;
      const auto& tr = net.transition(t);
      if (!tr.silent()) {
        out.insert(*tr.label);
        continue;
      }
      Marking next = fire(net, m, t);
      if (seen.size() < cap && seen.insert(next).second) queue.push_back(std::move(next));
    }
  }
  return out;
}

struct Evaluation {
  FitnessReport fitness;
  double precision = 0.0;
};

Evaluation evaluate_alignments(const PetriNet& net, const EventLog& log, const QualityOptions& options,
                               bool want_precision) {
  Evaluation ev;
  const auto variants = variants_of(log);
  std::optional<std::size_t> model_path;
  try {
    model_path = cheapest_model_path(net, options.alignment);
  } catch (const Error& e) {
    if (e.code() != Errc::SearchBudgetExceeded) throw;
  }

  struct PrefixState {
    std::set<std::string> observed;
    std::set<std::string> enabled;
    double weight = 0.0;
  };
  std::map<std::vector<std::string>, PrefixState> prefixes;

  double fitness_sum = 0.0;
  std::size_t traces = 0;
  for (const auto& v : variants) {
    traces += v.weight;
    std::optional<Alignment> alignment;
    if (model_path) {
      try {
        alignment = align(net, v.labels, options.alignment);
      } catch (const Error& e) {
        if (e.code() != Errc::SearchBudgetExceeded) throw;
      }
    }
    double f;
    if (alignment) {
      const double worst = static_cast<double>(v.labels.size() + *model_path);
      f = worst > 0 ? 1.0 - alignment->cost / worst : 1.0;
    } else {
      f = token_replay_fitness(net, v.labels);
      ev.fitness.fallback_traces += v.weight;
    }
    fitness_sum += f * static_cast<double>(v.weight);

    if (!want_precision || !alignment) continue;
    std::vector<std::string> prefix;
    Marking at_visible = net.initial_marking();
    auto visit = [&](const std::string& next) {
      auto& state = prefixes[prefix];
      if (state.weight == 0.0) state.enabled = enabled_continuations(net, at_visible, options.closure_state_cap);
      state.observed.insert(next);
      state.enabled.insert(next);
      state.weight += static_cast<double>(v.weight);
    };
    for (const auto& move : alignment->moves) {
      if (move.kind != MoveKind::Sync && move.kind != MoveKind::Model) continue;
      const std::string& label = *net.transition(*move.transition).label;
      visit(label);
      prefix.push_back(label);
      at_visible = fire(net, move.before, *move.transition);
    }
    visit("");
  }
  ev.fitness.traces = traces;
  ev.fitness.value = traces ? fitness_sum / static_cast<double>(traces) : 0.0;

  if (want_precision) {
    double num = 0.0, den = 0.0;
    for (const auto& [key, state] : prefixes) {
      num += state.weight * static_cast<double>(state.observed.size()) / static_cast<double>(state.enabled.size());
      den += state.weight;
    }
    ev.precision = den > 0 ? num / den : 0.0;
  }
  return ev;
}

}  // namespace

FitnessReport fitness(const PetriNet& net, const EventLog& log, const QualityOptions& options) {
  return evaluate_alignments(net, log, options, false).fitness;
}

double precision(const PetriNet& net, const EventLog& log, const QualityOptions& options) {
  return evaluate_alignments(net, log, options, true).precision;
}

// ---- complexity -----------------------------------------------------------

namespace {

enum class Branch { None, Xor, And };

struct FlowGraph {
  std::vector<std::vector<std::size_t>> succ;
  std::vector<Branch> split;
  std::vector<Branch> join;
  std::vector<std::size_t> exits;
};

// Unmatched splits: the immediate post-dominator of a split must be a join of
// the same type.
std::size_t unmatched_splits(const FlowGraph& g) {
  const std::size_t n = g.succ.size();
  const std::size_t exit = n;  // virtual exit
  std::vector<std::vector<std::size_t>> succ = g.succ;
  succ.emplace_back();
  for (std::size_t e : g.exits) succ[e].push_back(exit);
  for (std::size_t i = 0; i < n; ++i) {
    if (succ[i].empty()) succ[i].push_back(exit);
  }
  const std::size_t total = n + 1;
  const std::size_t words = (total + 63) / 64;
  using Bits = std::vector<std::uint64_t>;
  Bits all(words, ~0ULL);
  if (total % 64) all.back() = (1ULL << (total % 64)) - 1;
  std::vector<Bits> pdom(total, all);
  pdom[exit].assign(words, 0);
  pdom[exit][exit / 64] |= 1ULL << (exit % 64);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      Bits next = all;
      for (std::size_t s : succ[i]) {
        for (std::size_t w = 0; w < words; ++w) next[w] &= pdom[s][w];
      }
      next[i / 64] |= 1ULL << (i % 64);
      if (next != pdom[i]) {
        pdom[i] = std::move(next);
        changed = true;
      }
    }
  }
  auto popcount = [](const Bits& b) {
    std::size_t c = 0;
    for (auto w : b) c += static_cast<std::size_t>(__builtin_popcountll(w));
    return c;
  };
  std::size_t defects = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (g.split[i] == Branch::None) continue;
    Bits strict = pdom[i];
    strict[i / 64] &= ~(1ULL << (i % 64));
    const std::size_t size = popcount(strict);
    std::optional<std::size_t> ipdom;
    if (pdom[i] != all) {
      for (std::size_t d = 0; d < n; ++d) {
        if ((strict[d / 64] >> (d % 64) & 1ULL) && popcount(pdom[d]) == size) {
          ipdom = d;
          break;
        }
      }
    }
    if (!ipdom || g.join[*ipdom] != g.split[i]) ++defects;
  }
  return defects;
}

}  // namespace

Complexity complexity(const PetriNet& net) {
  Complexity c;
  c.size = net.place_count() + net.transition_count() + net.arc_count();
  const std::size_t np = net.place_count();
  FlowGraph g;
  g.succ.resize(np + net.transition_count());
  g.split.assign(g.succ.size(), Branch::None);
  g.join.assign(g.succ.size(), Branch::None);
  std::vector<std::size_t> place_in(np, 0);
  for (TransitionId t = 0; t < net.transition_count(); ++t) {
    const auto& tr = net.transition(t);
    for (PlaceId p : tr.inputs) g.succ[p].push_back(np + t);
    for (PlaceId p : tr.outputs) {
      g.succ[np + t].push_back(p);
      ++place_in[p];
    }
    if (tr.outputs.size() >= 2) {
      g.split[np + t] = Branch::And;
      c.cfc += 1;
    }
    if (tr.inputs.size() >= 2) g.join[np + t] = Branch::And;
  }
  for (PlaceId p = 0; p < np; ++p) {
    if (g.succ[p].size() >= 2) {
      g.split[p] = Branch::Xor;
      c.cfc += g.succ[p].size();
    }
    if (place_in[p] >= 2) g.join[p] = Branch::Xor;
    if (net.final_marking()[p] > 0) g.exits.push_back(p);
  }
  c.structuredness = unmatched_splits(g);
  return c;
}

Complexity complexity(const GatewayGraph& graph) {
  Complexity c;
  const auto& nodes = graph.nodes();
  c.size = nodes.size() + graph.edges().size();
  FlowGraph g;
  g.succ.resize(nodes.size());
  g.split.assign(nodes.size(), Branch::None);
  g.join.assign(nodes.size(), Branch::None);
  for (const auto& [u, v] : graph.edges()) g.succ[u].push_back(v);
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    switch (nodes[i].kind) {
      case NodeKind::XorSplit:
        g.split[i] = Branch::Xor;
        c.cfc += g.succ[i].size();
        break;
      case NodeKind::AndSplit:
        g.split[i] = Branch::And;
        c.cfc += 1;
        break;
      case NodeKind::XorJoin: g.join[i] = Branch::Xor; break;
      case NodeKind::AndJoin: g.join[i] = Branch::And; break;
      case NodeKind::End: g.exits.push_back(i); break;
      default: break;
    }
  }
  c.structuredness = unmatched_splits(g);
  return c;
}

ModelQuality evaluate_model(const PetriNet& net, const EventLog& log, const QualityOptions& options) {
  const Evaluation ev = evaluate_alignments(net, log, options, true);
  const Complexity cx = complexity(net);
  ModelQuality q;
  q.fitness = ev.fitness.value;
  q.precision = ev.precision;
  q.f_measure = f_measure(q.fitness, q.precision);
  q.size = cx.size;
  q.cfc = cx.cfc;
  q.structuredness = cx.structuredness;
  q.fallback_traces = ev.fitness.fallback_traces;
  return q;
}

nlohmann::json to_json(const ModelQuality& q) {
  return {{"fitness", q.fitness},
          {"precision", q.precision},
          {"f_measure", q.f_measure},
          {"size", q.size},
          {"cfc", q.cfc},
          {"structuredness", q.structuredness},
          {"search_fallback", q.fallback_traces > 0},
          {"fallback_traces", q.fallback_traces}};
}

// ---- AUC ----------------------------------------------------------------

namespace {

void split_by_label(const std::vector<double>& scores, const std::vector<int>& labels, std::vector<double>& pos,
                    std::vector<double>& neg) {
  if (scores.size() != labels.size()) throw Error(Errc::DimensionMismatch, "scores and labels differ in length");
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error(Errc::InvalidArgument, "labels must be 0 or 1");
    (labels[i] ? pos : neg).push_back(scores[i]);
  }
  if (pos.empty() || neg.empty()) throw Error(Errc::DegenerateLabels, "need at least one positive and one negative");
}

// Fraction of `others` below x, ties counting one half. `others` sorted.
double placement(const std::vector<double>& sorted_others, double x) {
  const auto lo = std::lower_bound(sorted_others.begin(), sorted_others.end(), x);
  const auto hi = std::upper_bound(sorted_others.begin(), sorted_others.end(), x);
  const double below = static_cast<double>(lo - sorted_others.begin());
  const double ties = static_cast<double>(hi - lo);
  return (below + 0.5 * ties) / static_cast<double>(sorted_others.size());
}

}  // namespace

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  std::vector<double> pos, neg;
  split_by_label(scores, labels, pos, neg);
  // Rank-sum form with midranks.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) rank_sum += midrank;
    }
    i = j + 1;
  }
  const double m = static_cast<double>(pos.size());
  const double n = static_cast<double>(neg.size());
  return (rank_sum - m * (m + 1.0) / 2.0) / (m * n);
}

AucReport delong_ci(const std::vector<double>& scores, const std::vector<int>& labels, double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(Errc::InvalidArgument, "confidence level must lie in (0,1)");
  std::vector<double> pos, neg;
  split_by_label(scores, labels, pos, neg);
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  const std::size_t m = pos.size(), n = neg.size();
  std::vector<double> v10(m), v01(n);
  for (std::size_t i = 0; i < m; ++i) v10[i] = placement(neg, pos[i]);
  for (std::size_t j = 0; j < n; ++j) v01[j] = 1.0 - placement(pos, neg[j]);
  const double a = std::accumulate(v10.begin(), v10.end(), 0.0) / static_cast<double>(m);
  auto sample_var = [](const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return s / static_cast<double>(v.size() - 1);
  };
  AucReport r;
  r.auc = a;
  r.n_pos = m;
  r.n_neg = n;
  r.variance = sample_var(v10, a) / static_cast<double>(m) + sample_var(v01, a) / static_cast<double>(n);
  const double z = boost::math::quantile(boost::math::normal(), 0.5 + level / 2.0);
  const double half = z * std::sqrt(r.variance);
  r.ci_low = std::clamp(a - half, 0.0, 1.0);
  r.ci_high = std::clamp(a + half, 0.0, 1.0);
  return r;
}

nlohmann::json to_json(const AucReport& r) {
  return {{"auc", r.auc},       {"ci_low", r.ci_low}, {"ci_high", r.ci_high},
          {"variance", r.variance}, {"n_pos", r.n_pos}, {"n_neg", r.n_neg}};
}

// ---- Wilcoxon -------------------------------------------------------------

namespace {

struct SignedRanks {
  std::vector<double> ranks;  // midranks of |d|
  std::vector<bool> positive;
  double w_plus = 0.0;
};

SignedRanks signed_ranks(const std::vector<double>& diffs) {
  std::vector<double> d;
  for (double x : diffs) {
    if (x != 0.0) d.push_back(x);
  }
  SignedRanks s;
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return std::fabs(d[a]) < std::fabs(d[b]); });
  s.ranks.assign(n, 0.0);
  s.positive.assign(n, false);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && std::fabs(d[order[j + 1]]) == std::fabs(d[order[i]])) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) s.ranks[order[k]] = midrank;
    i = j + 1;
  }
  for (std::size_t k = 0; k < n; ++k) {
    s.positive[k] = d[k] > 0;
    if (s.positive[k]) s.w_plus += s.ranks[k];
  }
  return s;
}

}  // namespace

double wilcoxon_exact_p(const std::vector<double>& diffs) {
  const SignedRanks s = signed_ranks(diffs);
  const std::size_t n = s.ranks.size();
  if (n == 0) return 1.0;
  // Doubled midranks are integers; count sign assignments per doubled sum.
  std::vector<long> doubled(n);
  long max_sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    doubled[i] = std::lround(2.0 * s.ranks[i]);
    max_sum += doubled[i];
  }
  std::vector<double> ways(static_cast<std::size_t>(max_sum) + 1, 0.0);
  ways[0] = 1.0;
  long reach = 0;
  for (long r : doubled) {
    for (long v = reach; v >= 0; --v) {
      if (ways[static_cast<std::size_t>(v)] != 0.0) ways[static_cast<std::size_t>(v + r)] += ways[static_cast<std::size_t>(v)];
    }
    reach += r;
  }
  const long observed = std::lround(2.0 * s.w_plus);
  const double total = std::ldexp(1.0, static_cast<int>(n));
  double lower = 0.0, upper = 0.0;
  for (long v = 0; v <= max_sum; ++v) {
    if (v <= observed) lower += ways[static_cast<std::size_t>(v)];
    if (v >= observed) upper += ways[static_cast<std::size_t>(v)];
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / total);
}

double wilcoxon_normal_p(const std::vector<double>& diffs) {
  const SignedRanks s = signed_ranks(diffs);
  const double n = static_cast<double>(s.ranks.size());
  if (n == 0) return 1.0;
  std::map<double, std::size_t> ties;
  for (double r : s.ranks) ++ties[r];
  double tie_term = 0.0;
  for (const auto& [r, t] : ties) {
    const double tt = static_cast<double>(t);
    tie_term += tt * tt * tt - tt;
  }
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
  if (var <= 0.0) return 1.0;
  const double z = std::max(0.0, std::fabs(s.w_plus - mean) - 0.5) / std::sqrt(var);
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& before, const std::vector<double>& after) {
  if (before.size() != after.size()) throw Error(Errc::DimensionMismatch, "paired vectors differ in length");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < before.size(); ++i) {
    const double d = after[i] - before[i];
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.size() < 5) {
    throw Error(Errc::TooFewPairs, std::to_string(diffs.size()) + " non-zero differences (need >= 5)");
  }
  WilcoxonResult r;
  r.n = diffs.size();
  r.statistic = signed_ranks(diffs).w_plus;
  r.exact = r.n <= 12;
  r.p_value = r.exact ? wilcoxon_exact_p(diffs) : wilcoxon_normal_p(diffs);
  return r;
}

}  // namespace procat
