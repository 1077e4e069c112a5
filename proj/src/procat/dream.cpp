#include "procat/dream.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "procat/csv.hpp"
#include "procat/error.hpp"

namespace procat {

DecayState::DecayState(double beta, std::vector<double> alpha_per_place) : beta_(beta), alpha_(std::move(alpha_per_place)) {
  if (!(beta_ > 0.0)) throw Error(Errc::InvalidArgument, "beta must be positive");
  for (double a : alpha_) {
    if (!(a > 0.0)) throw Error(Errc::InvalidArgument, "decay rates must be positive");
  }
}

double DecayState::response(std::size_t place, std::optional<Millis> last_entry, Millis now) const {
  if (!last_entry) return 0.0;
  const double elapsed = static_cast<double>(now - *last_entry);
  const double a = alpha_.at(place);
  if (elapsed >= beta_ / a) return 0.0;
  const double v = beta_ - a * elapsed;
  if (v <= 0.0) return 0.0;
  return std::min(v, beta_);
}

DecayEstimate estimate_decay_rates(const PetriNet& net, const EventLog& log, double beta, const DreamOptions& options) {
  if (!(beta > 0.0)) throw Error(Errc::InvalidArgument, "beta must be positive");
  if (log.empty()) throw Error(Errc::EmptyLog, "decay estimation needs a non-empty log");
  const std::size_t places = net.place_count();
  DecayEstimate est;
  for (const auto& t : log.traces()) est.max_duration = std::max(est.max_duration, t.duration());
  if (est.max_duration <= 0) throw Error(Errc::ZeroDuration, "every trace is instantaneous");

  est.max_visits.assign(places, 0);
  std::vector<double> gap_sum(places, 0.0);
  std::vector<std::size_t> gap_count(places, 0);
  Replayer replayer(net, options.replay);
  for (const auto& t : log.traces()) {
    replayer.reset();
    std::vector<std::size_t> visits(places, 0);
    std::vector<std::optional<Millis>> last(places);
    for (const auto& e : t.events) {
      const auto& step = replayer.step(e.label);
      for (std::size_t p = 0; p < places; ++p) {
        if (step.produced[p] == 0) continue;
        visits[p] += static_cast<std::size_t>(step.produced[p]);
        if (last[p] && e.timestamp > *last[p]) {
          gap_sum[p] += static_cast<double>(e.timestamp - *last[p]);
          ++gap_count[p];
        }
        last[p] = e.timestamp;
      }
    }
    for (std::size_t p = 0; p < places; ++p) est.max_visits[p] = std::max(est.max_visits[p], visits[p]);
  }
  std::vector<double> alpha(places);
  est.mean_gap.assign(places, 0.0);
  const double span = static_cast<double>(est.max_duration);
  for (std::size_t p = 0; p < places; ++p) {
    if (gap_count[p] > 0) est.mean_gap[p] = gap_sum[p] / static_cast<double>(gap_count[p]);
    if (est.max_visits[p] <= 1 || gap_count[p] == 0) {
      alpha[p] = beta / span;
    } else {
      alpha[p] = beta / est.mean_gap[p];
    }
  }
  est.state = DecayState(beta, std::move(alpha));
  return est;
}

std::vector<double> TimedStateSample::features() const {
  std::vector<double> out;
  out.reserve(width());
  out.insert(out.end(), decay_responses.begin(), decay_responses.end());
  out.insert(out.end(), token_counts.begin(), token_counts.end());
  out.insert(out.end(), marking.begin(), marking.end());
  return out;
}

std::vector<TimedStateSample> extract_tss(const PetriNet& net, const DecayState& decay, const EventLog& log,
                                          const DreamOptions& options) {
  const std::size_t places = net.place_count();
  if (decay.place_count() != places) {
    throw Error(Errc::DimensionMismatch, "decay state does not match the net's place count");
  }
  std::vector<TimedStateSample> samples;
  samples.reserve(log.event_count());
  Replayer replayer(net, options.replay);
  for (std::size_t ti = 0; ti < log.traces().size(); ++ti) {
    const auto& t = log.traces()[ti];
    replayer.reset();
    std::vector<double> counts(places, 0.0);
    std::vector<std::optional<Millis>> last(places);
    for (std::size_t j = 0; j < t.events.size(); ++j) {
      const auto& e = t.events[j];
      const auto& step = replayer.step(e.label);
      for (std::size_t p = 0; p < places; ++p) {
        if (step.produced[p] == 0) continue;
        counts[p] += step.produced[p];
        last[p] = e.timestamp;
      }
      TimedStateSample s;
      s.case_id = t.case_id;
      s.trace_index = ti;
      s.event_index = j;
      s.sample_time = e.timestamp;
      s.decay_responses.resize(places);
      for (std::size_t p = 0; p < places; ++p) s.decay_responses[p] = decay.response(p, last[p], e.timestamp);
      s.token_counts = counts;
      s.marking.resize(places);
      for (std::size_t p = 0; p < places; ++p) s.marking[p] = replayer.marking()[p];
      s.next_label = j + 1 < t.events.size() ? t.events[j + 1].label : kEndLabel;
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

FeatureMatrix tss_to_matrix(const std::vector<TimedStateSample>& samples, const AuxTable& aux,
                            const TssMatrixOptions& options) {
  FeatureMatrix fm;
  fm.aux_width = aux.width();
  std::vector<const TimedStateSample*> chosen;
  if (options.mode == TargetMode::NextEvent) {
    for (const auto& s : samples) chosen.push_back(&s);
  } else {
    std::map<std::string, std::size_t> last;
    std::vector<std::string> order;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      auto [it, inserted] = last.emplace(samples[i].case_id, i);
      if (inserted) {
        order.push_back(samples[i].case_id);
      } else if (samples[i].sample_time >= samples[it->second].sample_time) {
        it->second = i;
      }
    }
    for (const auto& c : order) chosen.push_back(&samples[last[c]]);
  }
  if (!chosen.empty()) fm.tss_width = chosen.front()->width();

  fm.classes = options.classes;
  if (fm.classes.empty()) {
    std::set<std::string> names;
    if (options.mode == TargetMode::NextEvent) {
      for (const auto* s : chosen) names.insert(s->next_label);
    } else {
      for (const auto& [c, label] : options.outcomes) names.insert(label);
    }
    fm.classes.assign(names.begin(), names.end());
  }
  auto class_index = [&](const std::string& name) -> int {
    auto it = std::find(fm.classes.begin(), fm.classes.end(), name);
    if (it == fm.classes.end()) return -1;
    return static_cast<int>(it - fm.classes.begin());
  };

  fm.cols = fm.tss_width + fm.aux_width;
  const std::vector<double> zeros(fm.aux_width, 0.0);
  for (const auto* s : chosen) {
    if (s->width() != fm.tss_width) throw Error(Errc::DimensionMismatch, "samples have differing widths");
    int target = -1;
    if (options.mode == TargetMode::NextEvent) {
      target = class_index(s->next_label);
    } else {
      auto it = options.outcomes.find(s->case_id);
      if (it == options.outcomes.end()) {
        throw Error(Errc::MissingAux, "no outcome label for case " + s->case_id);
      }
      target = class_index(it->second);
    }
    if (target < 0) continue;  // class outside a fixed vocabulary
    const std::vector<double>* extra = &zeros;
    if (fm.aux_width > 0) {
      auto it = aux.rows.find(s->case_id);
      if (it != aux.rows.end()) {
        extra = &it->second;
      } else if (options.strict_aux) {
        throw Error(Errc::MissingAux, "no auxiliary features for case " + s->case_id);
      }
    }
    const auto f = s->features();
    fm.values.insert(fm.values.end(), f.begin(), f.end());
    fm.values.insert(fm.values.end(), extra->begin(), extra->end());
    fm.targets.push_back(target);
    fm.case_ids.push_back(s->case_id);
    ++fm.rows;
  }
  return fm;
}

namespace {

double parse_double(const std::string& s, std::size_t row) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(Errc::MalformedRow, "not a number: '" + s + "'", row);
  }
  return v;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void write_tss_csv(std::ostream& out, const std::vector<TimedStateSample>& samples) {
  const std::size_t places = samples.empty() ? 0 : samples.front().decay_responses.size();
  std::vector<std::string> header{"case", "idx", "tau"};
  for (const char* prefix : {"f_", "c_", "m_"}) {
    for (std::size_t p = 0; p < places; ++p) header.push_back(prefix + std::to_string(p));
  }
  header.push_back("target");
  write_csv_row(out, header);
  std::vector<std::string> row;
  for (const auto& s : samples) {
    row = {s.case_id, std::to_string(s.event_index), std::to_string(s.sample_time)};
    for (double v : s.decay_responses) row.push_back(format_double(v));
    for (double v : s.token_counts) row.push_back(format_double(v));
    for (double v : s.marking) row.push_back(format_double(v));
    row.push_back(s.next_label);
    write_csv_row(out, row);
  }
}

std::vector<TimedStateSample> read_tss_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) throw Error(Errc::EmptyLog, "missing TSS header", 1);
  if (header.size() < 4 || header[0] != "case" || header[1] != "idx" || header[2] != "tau" || header.back() != "target" ||
      (header.size() - 4) % 3 != 0) {
    throw Error(Errc::MalformedRow, "TSS header must be case,idx,tau,f_*,c_*,m_*,target", 1);
  }
  const std::size_t places = (header.size() - 4) / 3;
  std::vector<TimedStateSample> out;
  std::vector<std::string> row;
  std::map<std::string, std::size_t> trace_of;
  while (reader.next(row)) {
    const std::size_t r = reader.record_number();
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size()) throw Error(Errc::MalformedRow, "column count mismatch", r);
    TimedStateSample s;
    s.case_id = row[0];
    s.event_index = static_cast<std::size_t>(parse_double(row[1], r));
    s.sample_time = static_cast<Millis>(parse_double(row[2], r));
    auto [it, inserted] = trace_of.emplace(s.case_id, trace_of.size());
    s.trace_index = it->second;
    for (std::size_t p = 0; p < places; ++p) {
      s.decay_responses.push_back(parse_double(row[3 + p], r));
      s.token_counts.push_back(parse_double(row[3 + places + p], r));
      s.marking.push_back(parse_double(row[3 + 2 * places + p], r));
    }
    s.next_label = row.back();
    out.push_back(std::move(s));
  }
  return out;
}

AuxTable read_aux_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header) || header.empty() || header[0] != "case") {
    throw Error(Errc::MalformedRow, "aux header must start with 'case'", 1);
  }
  AuxTable aux;
  aux.columns.assign(header.begin() + 1, header.end());
  std::vector<std::string> row;
  while (reader.next(row)) {
    const std::size_t r = reader.record_number();
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size()) throw Error(Errc::MalformedRow, "column count mismatch", r);
    std::vector<double> values;
    for (std::size_t c = 1; c < row.size(); ++c) values.push_back(parse_double(row[c], r));
    aux.rows[row[0]] = std::move(values);
  }
  return aux;
}

std::map<std::string, std::string> read_outcomes_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header) || header.size() != 2 || header[0] != "case") {
    throw Error(Errc::MalformedRow, "outcome header must be case,label", 1);
  }
  std::map<std::string, std::string> out;
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != 2) throw Error(Errc::MalformedRow, "column count mismatch", reader.record_number());
    out[row[0]] = row[1];
  }
  return out;
}

nlohmann::json to_json(const DecayEstimate& estimate, const PetriNet& net) {
  nlohmann::json places = nlohmann::json::array();
  for (std::size_t p = 0; p < net.place_count(); ++p) {
    places.push_back({{"place", net.place_name(p)},
                      {"alpha", estimate.state.alpha()[p]},
                      {"max_visits", estimate.max_visits[p]},
                      {"mean_gap_ms", estimate.mean_gap[p]}});
  }
  return {{"beta", estimate.state.beta()}, {"max_duration_ms", estimate.max_duration}, {"places", places}};
}

}  // namespace procat
