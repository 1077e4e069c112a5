#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace procat {

using Millis = std::int64_t;

struct EventInstance {
  std::string label;
  Millis timestamp = 0;
  std::map<std::string, std::string> attributes;

  // Empty string when the attribute is absent.
  const std::string& attribute(const std::string& key) const;

  bool operator==(const EventInstance&) const = default;
};

struct Trace {
  std::string case_id;
  std::vector<EventInstance> events;

  Millis duration() const;
  bool operator==(const Trace&) const = default;
};

class EventLog {
 public:
  EventLog() = default;
  // Validates unique case ids and non-empty labels; throws procat::Error.
  explicit EventLog(std::vector<Trace> traces);

  const std::vector<Trace>& traces() const noexcept { return traces_; }
  const std::set<std::string>& label_universe() const noexcept { return labels_; }
  std::size_t size() const noexcept { return traces_.size(); }
  bool empty() const noexcept { return traces_.empty(); }
  std::size_t event_count() const;

  // True when every trace is non-empty with strictly increasing timestamps.
  bool is_normalized() const;

  bool operator==(const EventLog& other) const { return traces_ == other.traces_; }

 private:
  std::vector<Trace> traces_;
  std::set<std::string> labels_;
};

enum class TimestampFormat { Millis, Rfc3339 };

struct CsvConfig {
  std::string case_column = "case";
  std::string activity_column = "activity";
  std::string timestamp_column = "timestamp";
  TimestampFormat format = TimestampFormat::Millis;
};

TimestampFormat parse_timestamp_format(const std::string& name);

// Milliseconds since the Unix epoch for an RFC-3339 date-time such as
// 2020-01-02T03:04:05.678Z or 2020-01-02T03:04:05+01:00.
Millis parse_rfc3339(const std::string& text);
std::string format_rfc3339(Millis ms);

// Groups rows by case id (first-appearance order), stable-sorts each trace by
// timestamp. Extra columns become event attributes.
EventLog parse_csv(std::istream& source, const CsvConfig& config = {});
EventLog read_csv_file(const std::string& path, const CsvConfig& config = {});

// Header `case,activity,timestamp[,attr...]`; attribute columns are the union
// of attribute keys in sorted order.
void write_csv(std::ostream& out, const EventLog& log, TimestampFormat format = TimestampFormat::Millis);

// Shifts the k-th member of a run of equal timestamps by +k ms.
EventLog normalize_timestamps(const EventLog& log);

class PetriNet;

struct TimingConfig {
  Millis min_gap = 1;
  Millis max_gap = 60'000;
  Millis start = 1'600'000'000'000;
  Millis case_spacing = 86'400'000;
};

struct GenerateOptions {
  std::size_t step_budget = 10'000;
};

// Play-out by uniform choice among enabled transitions until the final marking
// is reached. Deterministic in seed.
EventLog generate_log(const PetriNet& model, std::size_t n_traces, std::uint64_t seed,
                      const TimingConfig& timing = {}, const GenerateOptions& options = {});

}  // namespace procat
