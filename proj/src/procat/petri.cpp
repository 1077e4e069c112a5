#include "procat/petri.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "procat/error.hpp"
#include "procat/event_log.hpp"

namespace procat {

long Marking::total() const { return std::accumulate(tokens_.begin(), tokens_.end(), 0L); }

bool Marking::empty() const {
  return std::all_of(tokens_.begin(), tokens_.end(), [](int v) { return v == 0; });
}

std::size_t MarkingHash::operator()(const Marking& m) const noexcept {
  std::size_t h = 1469598103934665603ULL;
  for (int v : m.tokens()) {
    h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

PlaceId PetriNet::add_place(std::string name) {
  places_.push_back(std::move(name));
  initial_ = Marking(places_.size());
  final_ = Marking(places_.size());
  return places_.size() - 1;
}

TransitionId PetriNet::add_transition(std::string name, std::optional<std::string> label) {
  transitions_.push_back(Transition{std::move(name), std::move(label), {}, {}});
  return transitions_.size() - 1;
}

void PetriNet::add_input_arc(PlaceId from, TransitionId to) {
  if (from >= places_.size() || to >= transitions_.size()) {
    throw Error(Errc::InvalidArgument, "arc endpoint out of range");
  }
  auto& in = transitions_[to].inputs;
  if (std::find(in.begin(), in.end(), from) == in.end()) in.push_back(from);
}

void PetriNet::add_output_arc(TransitionId from, PlaceId to) {
  if (to >= places_.size() || from >= transitions_.size()) {
    throw Error(Errc::InvalidArgument, "arc endpoint out of range");
  }
  auto& out = transitions_[from].outputs;
  if (std::find(out.begin(), out.end(), to) == out.end()) out.push_back(to);
}

void PetriNet::set_initial_marking(Marking m) {
  if (m.size() != places_.size()) throw Error(Errc::InvalidArgument, "initial marking size mismatch");
  initial_ = std::move(m);
}

void PetriNet::set_final_marking(Marking m) {
  if (m.size() != places_.size()) throw Error(Errc::InvalidArgument, "final marking size mismatch");
  final_ = std::move(m);
}

std::size_t PetriNet::arc_count() const {
  std::size_t n = 0;
  for (const auto& t : transitions_) n += t.inputs.size() + t.outputs.size();
  return n;
}

std::optional<PlaceId> PetriNet::find_place(const std::string& name) const {
  auto it = std::find(places_.begin(), places_.end(), name);
  if (it == places_.end()) return std::nullopt;
  return static_cast<PlaceId>(it - places_.begin());
}

std::vector<TransitionId> PetriNet::transitions_with_label(const std::string& label) const {
  std::vector<TransitionId> out;
  for (TransitionId t = 0; t < transitions_.size(); ++t) {
    if (transitions_[t].label && *transitions_[t].label == label) out.push_back(t);
  }
  return out;
}

std::vector<std::string> PetriNet::alphabet() const {
  std::vector<std::string> out;
  for (const auto& t : transitions_) {
    if (t.label) out.push_back(*t.label);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<TransitionId> PetriNet::consumers(PlaceId p) const {
  std::vector<TransitionId> out;
  for (TransitionId t = 0; t < transitions_.size(); ++t) {
    const auto& in = transitions_[t].inputs;
    if (std::find(in.begin(), in.end(), p) != in.end()) out.push_back(t);
  }
  return out;
}

std::vector<TransitionId> PetriNet::producers(PlaceId p) const {
  std::vector<TransitionId> out;
  for (TransitionId t = 0; t < transitions_.size(); ++t) {
    const auto& o = transitions_[t].outputs;
    if (std::find(o.begin(), o.end(), p) != o.end()) out.push_back(t);
  }
  return out;
}

void PetriNet::validate() const {
  for (const auto& t : transitions_) {
    if (t.inputs.empty() || t.outputs.empty()) {
      throw Error(Errc::InvalidArgument, "transition '" + t.name + "' needs input and output arcs");
    }
    if (t.label && t.label->empty()) {
      throw Error(Errc::InvalidArgument, "transition '" + t.name + "' has an empty label");
    }
  }
  if (initial_.size() != places_.size() || final_.size() != places_.size()) {
    throw Error(Errc::InvalidArgument, "marking size mismatch");
  }
  for (int v : initial_.tokens()) {
    if (v < 0) throw Error(Errc::InvalidArgument, "negative initial marking");
  }
  for (int v : final_.tokens()) {
    if (v < 0) throw Error(Errc::InvalidArgument, "negative final marking");
  }
}

bool is_enabled(const PetriNet& net, const Marking& m, TransitionId t) {
  for (PlaceId p : net.transition(t).inputs) {
    if (m[p] < 1) return false;
  }
  return true;
}

std::vector<TransitionId> enabled(const PetriNet& net, const Marking& m) {
  std::vector<TransitionId> out;
  for (TransitionId t = 0; t < net.transition_count(); ++t) {
    if (is_enabled(net, m, t)) out.push_back(t);
  }
  return out;
}

Marking fire(const PetriNet& net, const Marking& m, TransitionId t) {
  if (!is_enabled(net, m, t)) {
    throw Error(Errc::NotEnabled, "transition '" + net.transition(t).name + "' is not enabled");
  }
  Marking next = m;
  for (PlaceId p : net.transition(t).inputs) next[p] -= 1;
  for (PlaceId p : net.transition(t).outputs) next[p] += 1;
  return next;
}

std::optional<std::vector<TransitionId>> shortest_silent_path(
    const PetriNet& net, const Marking& m, const std::function<bool(const Marking&)>& goal,
    std::size_t max_depth, std::size_t state_cap) {
  if (goal(m)) return std::vector<TransitionId>{};
  std::vector<TransitionId> silent;
  for (TransitionId t = 0; t < net.transition_count(); ++t) {
    if (net.transition(t).silent()) silent.push_back(t);
  }
  if (silent.empty()) return std::nullopt;

  struct Node {
    Marking marking;
    std::size_t parent;
    TransitionId via;
    std::size_t depth;
  };
  std::vector<Node> nodes{{m, 0, 0, 0}};
  std::unordered_set<Marking, MarkingHash> seen{m};
  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    const std::size_t cur = queue.front();
    queue.pop_front();
    if (nodes[cur].depth >= max_depth) continue;
    for (TransitionId t : silent) {
      if (!is_enabled(net, nodes[cur].marking, t)) continue;
      Marking next = fire(net, nodes[cur].marking, t);
      if (!seen.insert(next).second) continue;
      nodes.push_back({std::move(next), cur, t, nodes[cur].depth + 1});
      const std::size_t id = nodes.size() - 1;
      if (goal(nodes[id].marking)) {
        std::vector<TransitionId> path;
        for (std::size_t n = id; n != 0; n = nodes[n].parent) path.push_back(nodes[n].via);
        std::reverse(path.begin(), path.end());
        return path;
      }
      if (seen.size() >= state_cap) return std::nullopt;
      queue.push_back(id);
    }
  }
  return std::nullopt;
}

nlohmann::json marking_to_json(const PetriNet& net, const Marking& m) {
  nlohmann::json j = nlohmann::json::object();
  for (PlaceId p = 0; p < m.size(); ++p) {
    if (m[p] != 0) j[net.place_name(p)] = m[p];
  }
  return j;
}

nlohmann::json to_json(const PetriNet& net) {
  nlohmann::json j;
  j["places"] = net.place_names();
  auto transitions = nlohmann::json::array();
  auto arcs = nlohmann::json::array();
  for (const auto& t : net.transitions()) {
    nlohmann::json tj{{"id", t.name}};
    if (t.label) {
      tj["label"] = *t.label;
    } else {
      tj["silent"] = true;
    }
    transitions.push_back(tj);
    for (PlaceId p : t.inputs) arcs.push_back({{"from", net.place_name(p)}, {"to", t.name}});
    for (PlaceId p : t.outputs) arcs.push_back({{"from", t.name}, {"to", net.place_name(p)}});
  }
  j["transitions"] = transitions;
  j["arcs"] = arcs;
  j["initial_marking"] = marking_to_json(net, net.initial_marking());
  j["final_marking"] = marking_to_json(net, net.final_marking());
  return j;
}

PetriNet net_from_json(const nlohmann::json& j) {
  try {
    PetriNet net;
    std::unordered_map<std::string, PlaceId> places;
    std::unordered_map<std::string, TransitionId> transitions;
    for (const auto& p : j.at("places")) {
      const auto name = p.get<std::string>();
      if (places.count(name)) throw Error(Errc::InvalidArgument, "duplicate place '" + name + "'");
      places[name] = net.add_place(name);
    }
    for (const auto& t : j.at("transitions")) {
      const auto id = t.at("id").get<std::string>();
      if (transitions.count(id) || places.count(id)) {
        throw Error(Errc::InvalidArgument, "duplicate node id '" + id + "'");
      }
      std::optional<std::string> label;
      if (t.contains("label") && !t.at("label").is_null()) label = t.at("label").get<std::string>();
      transitions[id] = net.add_transition(id, label);
    }
    for (const auto& a : j.at("arcs")) {
      const auto from = a.at("from").get<std::string>();
      const auto to = a.at("to").get<std::string>();
      if (places.count(from) && transitions.count(to)) {
        net.add_input_arc(places[from], transitions[to]);
      } else if (transitions.count(from) && places.count(to)) {
        net.add_output_arc(transitions[from], places[to]);
      } else {
        throw Error(Errc::InvalidArgument, "arc " + from + " -> " + to + " is not place/transition");
      }
    }
    auto read_marking = [&](const char* key) {
      Marking m(net.place_count());
      if (!j.contains(key)) return m;
      for (const auto& [name, count] : j.at(key).items()) {
        auto it = places.find(name);
        if (it == places.end()) throw Error(Errc::InvalidArgument, std::string(key) + " names unknown place " + name);
        m[it->second] = count.get<int>();
      }
      return m;
    };
    net.set_initial_marking(read_marking("initial_marking"));
    net.set_final_marking(read_marking("final_marking"));
    net.validate();
    return net;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("bad net json: ") + e.what());
  }
}

std::string to_dot(const PetriNet& net) {
  std::ostringstream out;
  out << "digraph petri {\n  rankdir=LR;\n";
  for (PlaceId p = 0; p < net.place_count(); ++p) {
    out << "  p" << p << " [shape=circle,label=\"" << net.place_name(p);
    if (net.initial_marking()[p] > 0) out << "\\n" << std::string(net.initial_marking()[p], '*');
    out << "\"];\n";
  }
  for (TransitionId t = 0; t < net.transition_count(); ++t) {
    const auto& tr = net.transition(t);
    out << "  t" << t << " [shape=box";
    if (tr.silent()) {
      out << ",style=filled,fillcolor=black,label=\"\",width=0.15";
    } else {
      out << ",label=\"" << *tr.label << "\"";
    }
    out << "];\n";
    for (PlaceId p : tr.inputs) out << "  p" << p << " -> t" << t << ";\n";
    for (PlaceId p : tr.outputs) out << "  t" << t << " -> p" << p << ";\n";
  }
  out << "}\n";
  return out.str();
}

PetriNet sequence_net(const std::vector<std::string>& labels) {
  PetriNet net;
  PlaceId prev = net.add_place("src");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool last = i + 1 == labels.size();
    PlaceId next = net.add_place(last ? "sink" : "p" + std::to_string(i + 1));
    TransitionId t = net.add_transition(labels[i], labels[i]);
    net.add_input_arc(prev, t);
    net.add_output_arc(t, next);
    prev = next;
  }
  Marking init(net.place_count()), fin(net.place_count());
  init[0] = 1;
  fin[net.place_count() - 1] = 1;
  net.set_initial_marking(init);
  net.set_final_marking(fin);
  return net;
}

Replayer::Replayer(const PetriNet& net, ReplayOptions options) : net_(net), options_(options) {
  for (TransitionId t = 0; t < net.transition_count(); ++t) {
    if (net.transition(t).label) by_label_[*net.transition(t).label].push_back(t);
  }
  reset();
}

void Replayer::reset() {
  marking_ = net_.initial_marking();
  forced_ = missing_ = skipped_ = consumed_ = produced_ = 0;
  produced_per_place_.assign(net_.place_count(), 0);
  last_ = ReplayStep{};
}

void Replayer::fire_counted(TransitionId t) {
  marking_ = fire(net_, marking_, t);
  const auto& tr = net_.transition(t);
  consumed_ += tr.inputs.size();
  produced_ += tr.outputs.size();
  for (PlaceId p : tr.outputs) {
    last_.produced[p] += 1;
    produced_per_place_[p] += 1;
  }
}

const ReplayStep& Replayer::step(const std::string& label) {
  last_ = ReplayStep{};
  last_.produced.assign(net_.place_count(), 0);
  auto it = by_label_.find(label);
  if (it == by_label_.end()) {
    if (options_.policy == UnknownLabelPolicy::Strict) {
      throw Error(Errc::UnknownLabelPolicyViolation, "label '" + label + "' is not in the net alphabet");
    }
    last_.skipped = true;
    ++skipped_;
    return last_;
  }
  const auto& candidates = it->second;
  auto first_enabled = [&](const Marking& m) -> std::optional<TransitionId> {
    for (TransitionId t : candidates) {
      if (is_enabled(net_, m, t)) return t;
    }
    return std::nullopt;
  };
  if (auto t = first_enabled(marking_)) {
    fire_counted(*t);
    return last_;
  }
  auto path = shortest_silent_path(
      net_, marking_, [&](const Marking& m) { return first_enabled(m).has_value(); },
      net_.transition_count(), options_.silent_state_cap);
  if (path) {
    for (TransitionId s : *path) fire_counted(s);
    fire_counted(*first_enabled(marking_));
    return last_;
  }
  // Force-fire the candidate lacking the fewest tokens.
  TransitionId best = candidates.front();
  int best_missing = -1;
  for (TransitionId t : candidates) {
    int miss = 0;
    for (PlaceId p : net_.transition(t).inputs) miss += marking_[p] < 1 ? 1 : 0;
    if (best_missing < 0 || miss < best_missing) {
      best = t;
      best_missing = miss;
    }
  }
  for (PlaceId p : net_.transition(best).inputs) {
    if (marking_[p] < 1) marking_[p] += 1;
  }
  last_.forced = true;
  last_.missing = best_missing;
  ++forced_;
  missing_ += static_cast<std::size_t>(best_missing);
  fire_counted(best);
  return last_;
}

bool Replayer::finish() {
  last_ = ReplayStep{};
  last_.produced.assign(net_.place_count(), 0);
  const Marking target = net_.final_marking();
  auto path = shortest_silent_path(
      net_, marking_, [&](const Marking& m) { return m == target; }, net_.transition_count(),
      options_.silent_state_cap);
  if (!path) return false;
  for (TransitionId s : *path) fire_counted(s);
  return true;
}

ReplayResult replay_trace(const PetriNet& net, const Trace& trace, const ReplayOptions& options) {
  Replayer replayer(net, options);
  for (const auto& e : trace.events) replayer.step(e.label);
  ReplayResult r;
  r.reached_final = options.complete_to_final ? replayer.finish() : replayer.marking() == net.final_marking();
  r.final_marking = replayer.marking();
  r.forced_firings = replayer.forced_firings();
  r.missing_tokens = replayer.missing_tokens();
  r.skipped_events = replayer.skipped_events();
  r.consumed_tokens = replayer.consumed_tokens();
  r.produced_tokens = replayer.produced_tokens();
  r.produced_per_place = replayer.produced_per_place();
  for (PlaceId p = 0; p < net.place_count(); ++p) {
    const int extra = r.final_marking[p] - net.final_marking()[p];
    if (extra > 0) r.remaining_tokens += static_cast<std::size_t>(extra);
  }
  return r;
}

}  // namespace procat
