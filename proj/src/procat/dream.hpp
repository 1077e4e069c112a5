#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "procat/event_log.hpp"
#include "procat/petri.hpp"

namespace procat {

inline constexpr const char* kEndLabel = "<END>";

// Linear per-place decay f_p(tau) = max(beta - alpha_p * (tau - tau_p), 0).
class DecayState {
 public:
  DecayState() = default;
  DecayState(double beta, std::vector<double> alpha_per_place);

  double beta() const noexcept { return beta_; }
  const std::vector<double>& alpha() const noexcept { return alpha_; }
  std::size_t place_count() const noexcept { return alpha_.size(); }

  // Response of a place last entered at `last_entry` (nullopt = never).
  double response(std::size_t place, std::optional<Millis> last_entry, Millis now) const;

 private:
  double beta_ = 1.0;
  std::vector<double> alpha_;
};

struct DecayEstimate {
  DecayState state;
  Millis max_duration = 0;
  std::vector<std::size_t> max_visits;  // max_g v_p(g)
  std::vector<double> mean_gap;         // pooled mean reactivation gap, 0 when none
};

struct DreamOptions {
  ReplayOptions replay{UnknownLabelPolicy::Lenient, 20'000, false};
};

// Throws Errc::ZeroDuration when every trace is instantaneous.
DecayEstimate estimate_decay_rates(const PetriNet& net, const EventLog& log, double beta = 1.0,
                                   const DreamOptions& options = {});

struct TimedStateSample {
  std::string case_id;
  std::size_t trace_index = 0;
  std::size_t event_index = 0;
  Millis sample_time = 0;
  std::vector<double> decay_responses;  // F
  std::vector<double> token_counts;     // C
  std::vector<double> marking;          // M
  std::string next_label;

  std::size_t width() const noexcept { return decay_responses.size() + token_counts.size() + marking.size(); }
  std::vector<double> features() const;
};

std::vector<TimedStateSample> extract_tss(const PetriNet& net, const DecayState& decay, const EventLog& log,
                                          const DreamOptions& options = {});

enum class TargetMode { NextEvent, Outcome };

struct AuxTable {
  std::vector<std::string> columns;
  std::map<std::string, std::vector<double>> rows;  // case id -> values

  std::size_t width() const noexcept { return columns.size(); }
};

struct TssMatrixOptions {
  TargetMode mode = TargetMode::NextEvent;
  bool strict_aux = false;
  // Next-event class vocabulary; built from the samples when empty.
  std::vector<std::string> classes;
  // Outcome per case (outcome mode).
  std::map<std::string, std::string> outcomes;
};

struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
  std::vector<int> targets;
  std::vector<std::string> classes;
  std::vector<std::string> case_ids;
  std::size_t tss_width = 0;
  std::size_t aux_width = 0;

  const double* row(std::size_t r) const { return values.data() + r * cols; }
};

FeatureMatrix tss_to_matrix(const std::vector<TimedStateSample>& samples, const AuxTable& aux,
                            const TssMatrixOptions& options = {});

// Header: case,idx,tau,f_0..,c_0..,m_0..,target.
void write_tss_csv(std::ostream& out, const std::vector<TimedStateSample>& samples);
std::vector<TimedStateSample> read_tss_csv(std::istream& in);

// Header: case,<columns...>; numeric values.
AuxTable read_aux_csv(std::istream& in);
// Header: case,label.
std::map<std::string, std::string> read_outcomes_csv(std::istream& in);

nlohmann::json to_json(const DecayEstimate& estimate, const PetriNet& net);

}  // namespace procat
