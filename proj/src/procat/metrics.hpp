#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "procat/petri.hpp"

namespace procat {

class EventLog;
class GatewayGraph;

// ---- alignments ---------------------------------------------------------

enum class MoveKind { Sync, Log, Model, Silent };

struct AlignmentMove {
  MoveKind kind;
  std::optional<TransitionId> transition;  // unset for log moves
  std::size_t event = 0;                   // trace position consumed (sync/log)
  Marking before;                          // marking before the move
};

struct Alignment {
  double cost = 0.0;
  std::vector<AlignmentMove> moves;
  std::size_t states_expanded = 0;
};

struct AlignmentOptions {
  std::size_t max_states = 1'000'000;
};

// Optimal alignment of `labels` against the net by best-first search over the
// synchronous product: log and visible model moves cost 1, sync and silent 0.
// Throws Errc::SearchBudgetExceeded when the state cap is hit.
Alignment align(const PetriNet& net, const std::vector<std::string>& labels, const AlignmentOptions& options = {});

// Number of visible transitions on the cheapest complete run of the net.
std::size_t cheapest_model_path(const PetriNet& net, const AlignmentOptions& options = {});

// ---- model quality ------------------------------------------------------

struct QualityOptions {
  AlignmentOptions alignment;
  std::size_t closure_state_cap = 10'000;
};

struct FitnessReport {
  double value = 0.0;
  std::size_t traces = 0;
  std::size_t fallback_traces = 0;  // token-replay fitness used
};

FitnessReport fitness(const PetriNet& net, const EventLog& log, const QualityOptions& options = {});
double precision(const PetriNet& net, const EventLog& log, const QualityOptions& options = {});
double f_measure(double fitness, double precision);

// 0.5 (1 - missing/consumed) + 0.5 (1 - remaining/produced).
double token_replay_fitness(const PetriNet& net, const std::vector<std::string>& labels);

struct Complexity {
  std::size_t size = 0;
  std::size_t cfc = 0;
  std::size_t structuredness = 0;  // unmatched splits

  bool operator==(const Complexity&) const = default;
};

Complexity complexity(const PetriNet& net);
Complexity complexity(const GatewayGraph& graph);

struct ModelQuality {
  double fitness = 0.0;
  double precision = 0.0;
  double f_measure = 0.0;
  std::size_t size = 0;
  std::size_t cfc = 0;
  std::size_t structuredness = 0;
  std::size_t fallback_traces = 0;
};

// Fitness and precision over one set of alignments, plus complexity.
ModelQuality evaluate_model(const PetriNet& net, const EventLog& log, const QualityOptions& options = {});
nlohmann::json to_json(const ModelQuality& q);

// ---- prediction statistics -----------------------------------------------

// Mann-Whitney AUC, ties credited 0.5. labels: 1 = positive.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

struct AucReport {
  double auc = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double variance = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

AucReport delong_ci(const std::vector<double>& scores, const std::vector<int>& labels, double level = 0.95);
nlohmann::json to_json(const AucReport& r);

struct WilcoxonResult {
  double p_value = 1.0;
  double statistic = 0.0;  // W+ (sum of ranks of positive differences)
  std::size_t n = 0;       // non-zero differences
  bool exact = false;
};

// Two-sided signed-rank test on after - before. Exact for n <= 12, normal
// approximation with continuity correction otherwise. Throws Errc::TooFewPairs
// when fewer than 5 non-zero differences remain.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& before, const std::vector<double>& after);
double wilcoxon_exact_p(const std::vector<double>& diffs);
double wilcoxon_normal_p(const std::vector<double>& diffs);

}  // namespace procat
