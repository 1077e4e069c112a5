#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace procat {

struct Trace;

using PlaceId = std::size_t;
using TransitionId = std::size_t;

class Marking {
 public:
  Marking() = default;
  explicit Marking(std::size_t places) : tokens_(places, 0) {}
  explicit Marking(std::vector<int> tokens) : tokens_(std::move(tokens)) {}

  int operator[](PlaceId p) const { return tokens_.at(p); }
  int& operator[](PlaceId p) { return tokens_.at(p); }
  std::size_t size() const noexcept { return tokens_.size(); }
  long total() const;
  bool empty() const;
  const std::vector<int>& tokens() const noexcept { return tokens_; }

  auto operator<=>(const Marking&) const = default;

 private:
  std::vector<int> tokens_;
};

struct MarkingHash {
  std::size_t operator()(const Marking& m) const noexcept;
};

struct Transition {
  std::string name;
  std::optional<std::string> label;  // nullopt = silent
  std::vector<PlaceId> inputs;
  std::vector<PlaceId> outputs;

  bool silent() const noexcept { return !label.has_value(); }
};

class PetriNet {
 public:
  PlaceId add_place(std::string name);
  TransitionId add_transition(std::string name, std::optional<std::string> label);
  void add_input_arc(PlaceId from, TransitionId to);
  void add_output_arc(TransitionId from, PlaceId to);
  void set_initial_marking(Marking m);
  void set_final_marking(Marking m);

  std::size_t place_count() const noexcept { return places_.size(); }
  std::size_t transition_count() const noexcept { return transitions_.size(); }
  std::size_t arc_count() const;
  const std::string& place_name(PlaceId p) const { return places_.at(p); }
  const std::vector<std::string>& place_names() const noexcept { return places_; }
  const Transition& transition(TransitionId t) const { return transitions_.at(t); }
  const std::vector<Transition>& transitions() const noexcept { return transitions_; }
  const Marking& initial_marking() const noexcept { return initial_; }
  const Marking& final_marking() const noexcept { return final_; }

  std::optional<PlaceId> find_place(const std::string& name) const;
  // Visible transitions carrying `label`, in id order.
  std::vector<TransitionId> transitions_with_label(const std::string& label) const;
  std::vector<std::string> alphabet() const;
  std::vector<TransitionId> consumers(PlaceId p) const;
  std::vector<TransitionId> producers(PlaceId p) const;

  // Bipartite by construction; checks arc arity and marking sizes.
  void validate() const;

 private:
  std::vector<std::string> places_;
  std::vector<Transition> transitions_;
  Marking initial_;
  Marking final_;
};

std::vector<TransitionId> enabled(const PetriNet& net, const Marking& m);
bool is_enabled(const PetriNet& net, const Marking& m, TransitionId t);
// Throws Errc::NotEnabled.
Marking fire(const PetriNet& net, const Marking& m, TransitionId t);

// Silent firing sequence (shortest, ties by transition id) from `m` to a
// marking satisfying `goal`. nullopt when none exists within the bounds.
std::optional<std::vector<TransitionId>> shortest_silent_path(
    const PetriNet& net, const Marking& m, const std::function<bool(const Marking&)>& goal,
    std::size_t max_depth, std::size_t state_cap);

nlohmann::json to_json(const PetriNet& net);
PetriNet net_from_json(const nlohmann::json& j);
std::string to_dot(const PetriNet& net);
nlohmann::json marking_to_json(const PetriNet& net, const Marking& m);

// Builder for a pure sequence net: src -> a -> p1 -> b -> ... -> sink.
PetriNet sequence_net(const std::vector<std::string>& labels);

enum class UnknownLabelPolicy { Lenient, Strict };

struct ReplayOptions {
  UnknownLabelPolicy policy = UnknownLabelPolicy::Lenient;
  std::size_t silent_state_cap = 20'000;
  // Fire silent transitions after the last event to reach the final marking.
  bool complete_to_final = true;
};

struct ReplayStep {
  bool skipped = false;
  bool forced = false;
  int missing = 0;
  // Tokens that entered each place while handling this event.
  std::vector<int> produced;
};

class Replayer {
 public:
  Replayer(const PetriNet& net, ReplayOptions options = {});

  void reset();
  const ReplayStep& step(const std::string& label);
  // Silent completion toward the final marking; returns whether it was reached.
  bool finish();

  const Marking& marking() const noexcept { return marking_; }
  std::size_t forced_firings() const noexcept { return forced_; }
  std::size_t missing_tokens() const noexcept { return missing_; }
  std::size_t skipped_events() const noexcept { return skipped_; }
  std::size_t consumed_tokens() const noexcept { return consumed_; }
  std::size_t produced_tokens() const noexcept { return produced_; }
  const std::vector<std::size_t>& produced_per_place() const noexcept { return produced_per_place_; }

 private:
  void fire_counted(TransitionId t);

  const PetriNet& net_;
  ReplayOptions options_;
  std::map<std::string, std::vector<TransitionId>> by_label_;
  Marking marking_;
  ReplayStep last_;
  std::size_t forced_ = 0;
  std::size_t missing_ = 0;
  std::size_t skipped_ = 0;
  std::size_t consumed_ = 0;
  std::size_t produced_ = 0;
  std::vector<std::size_t> produced_per_place_;
};

struct ReplayResult {
  Marking final_marking;
  std::size_t forced_firings = 0;
  std::size_t missing_tokens = 0;
  std::size_t skipped_events = 0;
  std::size_t consumed_tokens = 0;
  std::size_t produced_tokens = 0;
  std::size_t remaining_tokens = 0;
  bool reached_final = false;
  std::vector<std::size_t> produced_per_place;
};

ReplayResult replay_trace(const PetriNet& net, const Trace& trace, const ReplayOptions& options = {});

}  // namespace procat
