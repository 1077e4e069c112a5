#include "procat/event_log.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <unordered_map>

#include "procat/csv.hpp"
#include "procat/error.hpp"
#include "procat/petri.hpp"

namespace procat {

const std::string& EventInstance::attribute(const std::string& key) const {
  static const std::string empty;
  auto it = attributes.find(key);
  return it == attributes.end() ? empty : it->second;
}

Millis Trace::duration() const {
  if (events.empty()) return 0;
  return events.back().timestamp - events.front().timestamp;
}

EventLog::EventLog(std::vector<Trace> traces) : traces_(std::move(traces)) {
  std::unordered_map<std::string, std::size_t> seen;
  for (std::size_t i = 0; i < traces_.size(); ++i) {
    if (!seen.emplace(traces_[i].case_id, i).second) {
      throw Error(Errc::InvalidArgument, "duplicate case id '" + traces_[i].case_id + "'");
    }
    for (const auto& e : traces_[i].events) {
      if (e.label.empty()) throw Error(Errc::InvalidArgument, "empty label in case " + traces_[i].case_id);
      if (e.timestamp < 0) throw Error(Errc::InvalidArgument, "negative timestamp in case " + traces_[i].case_id);
      labels_.insert(e.label);
    }
  }
}

std::size_t EventLog::event_count() const {
  std::size_t n = 0;
  for (const auto& t : traces_) n += t.events.size();
  return n;
}

bool EventLog::is_normalized() const {
  for (const auto& t : traces_) {
    if (t.events.empty()) return false;
    for (std::size_t j = 1; j < t.events.size(); ++j) {
      if (t.events[j - 1].timestamp >= t.events[j].timestamp) return false;
    }
  }
  return true;
}

TimestampFormat parse_timestamp_format(const std::string& name) {
  if (name == "ms") return TimestampFormat::Millis;
  if (name == "rfc3339") return TimestampFormat::Rfc3339;
  throw Error(Errc::InvalidArgument, "unknown timestamp format '" + name + "' (ms|rfc3339)");
}

namespace {

bool read_digits(const std::string& s, std::size_t& pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  pos += count;
  out = v;
  return true;
}

bool expect(const std::string& s, std::size_t& pos, char c) {
  if (pos < s.size() && s[pos] == c) {
    ++pos;
    return true;
  }
  return false;
}

std::optional<Millis> try_parse_rfc3339(const std::string& s) {
  using namespace std::chrono;
  std::size_t pos = 0;
  int y, mo, d, h, mi, sec;
  if (!read_digits(s, pos, 4, y) || !expect(s, pos, '-') || !read_digits(s, pos, 2, mo) ||
      !expect(s, pos, '-') || !read_digits(s, pos, 2, d)) {
    return std::nullopt;
  }
  if (pos >= s.size() || (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ')) return std::nullopt;
  ++pos;
  if (!read_digits(s, pos, 2, h) || !expect(s, pos, ':') || !read_digits(s, pos, 2, mi) ||
      !expect(s, pos, ':') || !read_digits(s, pos, 2, sec)) {
    return std::nullopt;
  }
  Millis frac_ms = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int digits = 0;
    Millis scale = 100;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (digits < 3) frac_ms += (s[pos] - '0') * scale;
      scale /= 10;
      ++digits;
      ++pos;
    }
    if (digits == 0) return std::nullopt;
  }
  Millis offset_min = 0;
  if (pos < s.size() && (s[pos] == 'Z' || s[pos] == 'z')) {
    ++pos;
  } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
    const int sign = s[pos] == '-' ? -1 : 1;
    ++pos;
    int oh, om;
    if (!read_digits(s, pos, 2, oh) || !expect(s, pos, ':') || !read_digits(s, pos, 2, om)) return std::nullopt;
    offset_min = sign * (oh * 60 + om);
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  const auto days = sys_days{ymd}.time_since_epoch().count();
  const Millis ms = ((static_cast<Millis>(days) * 24 + h) * 60 + mi) * 60'000 + static_cast<Millis>(sec) * 1000 +
                    frac_ms - offset_min * 60'000;
  return ms;
}

std::optional<Millis> try_parse_millis(const std::string& s) {
  Millis v = 0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc{} || ptr != e || s.empty()) return std::nullopt;
  return v;
}

}  // namespace

Millis parse_rfc3339(const std::string& text) {
  auto v = try_parse_rfc3339(text);
  if (!v) throw Error(Errc::BadTimestamp, "cannot parse '" + text + "' as RFC-3339");
  return *v;
}

std::string format_rfc3339(Millis ms) {
  using namespace std::chrono;
  Millis days = ms >= 0 ? ms / 86'400'000 : -((-ms + 86'399'999) / 86'400'000);
  Millis rem = ms - days * 86'400'000;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long long>(rem / 3'600'000), static_cast<long long>(rem / 60'000 % 60),
                static_cast<long long>(rem / 1000 % 60), static_cast<long long>(rem % 1000));
  return buf;
}

EventLog parse_csv(std::istream& source, const CsvConfig& config) {
  CsvReader reader(source);
  std::vector<std::string> header;
  if (!reader.next(header)) throw Error(Errc::EmptyLog, "missing header", 1);
  auto column = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(Errc::MalformedRow, "header lacks column '" + name + "'", 1);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t case_col = column(config.case_column);
  const std::size_t act_col = column(config.activity_column);
  const std::size_t ts_col = column(config.timestamp_column);

  std::vector<Trace> traces;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::string> row;
  std::size_t rows = 0;
  while (reader.next(row)) {
    const std::size_t row_no = reader.record_number();
    if (row.size() == 1 && row[0].empty()) continue;
    if (row.size() != header.size()) {
      throw Error(Errc::MalformedRow,
                  "expected " + std::to_string(header.size()) + " columns, got " + std::to_string(row.size()), row_no);
    }
    const std::string& ts = row[ts_col];
    auto stamp = config.format == TimestampFormat::Millis ? try_parse_millis(ts) : try_parse_rfc3339(ts);
    if (!stamp || *stamp < 0) throw Error(Errc::BadTimestamp, "cannot parse timestamp '" + ts + "'", row_no);
    if (row[act_col].empty()) throw Error(Errc::MalformedRow, "empty activity", row_no);
    if (row[case_col].empty()) throw Error(Errc::MalformedRow, "empty case id", row_no);
    EventInstance e{row[act_col], *stamp, {}};
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == case_col || c == act_col || c == ts_col || row[c].empty()) continue;
      e.attributes[header[c]] = row[c];
    }
    auto [it, inserted] = index.emplace(row[case_col], traces.size());
    if (inserted) traces.push_back(Trace{row[case_col], {}});
    traces[it->second].events.push_back(std::move(e));
    ++rows;
  }
  if (rows == 0) throw Error(Errc::EmptyLog, "no event rows", reader.record_number());
  for (auto& t : traces) {
    std::stable_sort(t.events.begin(), t.events.end(),
                     [](const EventInstance& a, const EventInstance& b) { return a.timestamp < b.timestamp; });
  }
  return EventLog(std::move(traces));
}

EventLog read_csv_file(const std::string& path, const CsvConfig& config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path + "'");
  return parse_csv(in, config);
}

void write_csv(std::ostream& out, const EventLog& log, TimestampFormat format) {
  std::set<std::string> keys;
  for (const auto& t : log.traces()) {
    for (const auto& e : t.events) {
      for (const auto& [k, v] : e.attributes) keys.insert(k);
    }
  }
  std::vector<std::string> header{"case", "activity", "timestamp"};
  header.insert(header.end(), keys.begin(), keys.end());
  write_csv_row(out, header);
  std::vector<std::string> row;
  for (const auto& t : log.traces()) {
    for (const auto& e : t.events) {
      row = {t.case_id, e.label,
             format == TimestampFormat::Millis ? std::to_string(e.timestamp) : format_rfc3339(e.timestamp)};
      for (const auto& k : keys) row.push_back(e.attribute(k));
      write_csv_row(out, row);
    }
  }
}

EventLog normalize_timestamps(const EventLog& log) {
  std::vector<Trace> traces = log.traces();
  for (auto& t : traces) {
    auto& ev = t.events;
    std::size_t i = 0;
    while (i < ev.size()) {
      std::size_t j = i;
      while (j + 1 < ev.size() && ev[j + 1].timestamp == ev[i].timestamp) ++j;
      const Millis base = ev[i].timestamp;
      const Millis last_shift = static_cast<Millis>(j - i);
      if (j + 1 < ev.size() && base + last_shift >= ev[j + 1].timestamp) {
        throw Error(Errc::ShiftCollision, "case " + t.case_id + ": run of " + std::to_string(j - i + 1) +
                                              " events at " + std::to_string(base) + " ms collides with " +
                                              std::to_string(ev[j + 1].timestamp));
      }
      for (std::size_t k = i; k <= j; ++k) ev[k].timestamp = base + static_cast<Millis>(k - i);
      i = j + 1;
    }
  }
  return EventLog(std::move(traces));
}

EventLog generate_log(const PetriNet& model, std::size_t n_traces, std::uint64_t seed, const TimingConfig& timing,
                      const GenerateOptions& options) {
  if (timing.min_gap < 1 || timing.max_gap < timing.min_gap) {
    throw Error(Errc::InvalidArgument, "timing gaps must satisfy 1 <= min_gap <= max_gap");
  }
  model.validate();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Millis> gap(timing.min_gap, timing.max_gap);
  std::vector<Trace> traces;
  traces.reserve(n_traces);
  const int width = std::max<int>(4, static_cast<int>(std::to_string(n_traces).size()));
  for (std::size_t i = 0; i < n_traces; ++i) {
    std::string id = std::to_string(i);
    Trace trace{"case_" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(id.size()))), '0') + id, {}};
    Marking m = model.initial_marking();
    Millis now = timing.start + static_cast<Millis>(i) * timing.case_spacing;
    std::size_t steps = 0;
    while (m != model.final_marking()) {
      auto choices = enabled(model, m);
      if (choices.empty()) throw Error(Errc::Deadlock, "no enabled transition before the final marking", i);
      if (++steps > options.step_budget) throw Error(Errc::Deadlock, "step budget exhausted", i);
      std::uniform_int_distribution<std::size_t> pick(0, choices.size() - 1);
      const TransitionId t = choices[pick(rng)];
      m = fire(model, m, t);
      if (const auto& label = model.transition(t).label) {
        if (!trace.events.empty()) now += gap(rng);
        trace.events.push_back(EventInstance{*label, now, {}});
      }
    }
    if (trace.events.empty()) throw Error(Errc::Deadlock, "play-out produced no visible events", i);
    traces.push_back(std::move(trace));
  }
  return EventLog(std::move(traces));
}

}  // namespace procat
