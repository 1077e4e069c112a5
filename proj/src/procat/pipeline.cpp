#include "procat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "procat/concat.hpp"
#include "procat/csv.hpp"
#include "procat/error.hpp"

namespace procat {

namespace {

// Appends pieces to a growing workflow net.
class NetBuilder {
 public:
  NetBuilder() { cur_ = net_.add_place("src"); }

  PlaceId place() { return net_.add_place("p" + std::to_string(++places_)); }

  void activity(const std::string& label) {
    const auto t = net_.add_transition(label + "_" + std::to_string(++transitions_), label);
    net_.add_input_arc(cur_, t);
    cur_ = place();
    net_.add_output_arc(t, cur_);
  }

  void sequence(const std::vector<std::string>& labels) {
    for (const auto& l : labels) activity(l);
  }

  // Silent choice between alternative label sequences.
  void choice(const std::vector<std::vector<std::string>>& alternatives) {
    const PlaceId in = cur_;
    const PlaceId out = place();
    for (const auto& alt : alternatives) {
      const auto tau = net_.add_transition("tau_" + std::to_string(++transitions_), std::nullopt);
      net_.add_input_arc(in, tau);
      cur_ = place();
      net_.add_output_arc(tau, cur_);
      sequence(alt);
      const auto join = net_.add_transition("tau_" + std::to_string(++transitions_), std::nullopt);
      net_.add_input_arc(cur_, join);
      net_.add_output_arc(join, out);
    }
    cur_ = out;
  }

  PetriNet finish() {
    Marking initial(net_.place_count());
    initial[0] = 1;
    Marking final(net_.place_count());
    final[cur_] = 1;
    net_.set_initial_marking(initial);
    net_.set_final_marking(final);
    net_.validate();
    return net_;
  }

 private:
  PetriNet net_;
  PlaceId cur_ = 0;
  std::size_t places_ = 0;
  std::size_t transitions_ = 0;
};

std::vector<std::string> alternation(const std::string& first, const std::string& second, std::size_t length) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < length; ++i) out.push_back(i % 2 == 0 ? first : second);
  return out;
}

std::vector<std::vector<std::string>> alternation_block(const std::string& a, const std::string& b) {
  return {alternation(a, b, 6), alternation(b, a, 6), alternation(a, b, 8), alternation(b, a, 8)};
}

std::vector<std::string> concat_seq(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << std::fixed << v;
  return os.str();
}

}  // namespace

PetriNet synthetic_net(std::size_t interleaved_pairs, bool interleaved_branches) {
  NetBuilder b;
  b.activity("start");
  for (std::size_t k = 1; k <= interleaved_pairs; ++k) {
    const std::string a = "a" + std::to_string(k);
    const std::string c = "b" + std::to_string(k);
    b.choice(alternation_block(a, c));
    b.activity("x" + std::to_string(k));
  }
  if (interleaved_branches) {
    // Same labels in both branches; only the position of the block differs.
    std::vector<std::vector<std::string>> alts;
    for (const auto& block : alternation_block("c", "d")) alts.push_back(concat_seq(block, {"f"}));
    for (const auto& block : alternation_block("c", "d")) alts.push_back(concat_seq({"f"}, block));
    b.choice(alts);
  } else {
    b.choice({{"c", "d", "f"}, {"f", "g", "c"}});
  }
  b.activity("end");
  return b.finish();
}

EventLog add_noise(const EventLog& log, double fraction, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Trace> traces = log.traces();
  for (auto& t : traces) {
    if (u(rng) >= fraction || t.events.size() < 2) continue;
    std::uniform_int_distribution<std::size_t> pos(0, t.events.size() - 2);
    const std::size_t i = pos(rng);
    if (u(rng) < 0.5) {
      std::swap(t.events[i].label, t.events[i + 1].label);
    } else {
      t.events.erase(t.events.begin() + static_cast<std::ptrdiff_t>(i + 1));
    }
  }
  return EventLog(std::move(traces));
}

SyntheticDataset make_synthetic(const SyntheticSpec& spec) {
  SyntheticDataset d;
  d.name = spec.name;
  d.model = synthetic_net(spec.interleaved_pairs, spec.interleaved_branches);
  const EventLog clean = generate_log(d.model, spec.traces, spec.seed);
  std::mt19937_64 rng(spec.seed * 0x9E3779B97F4A7C15ULL + 11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  d.aux.columns = {"aux_signal", "aux_noise"};
  for (const auto& t : clean.traces()) {
    // Branch 1 starts its outcome segment with f.
    bool branch = false;
    for (const auto& e : t.events) {
      if (e.label == "c" || e.label == "d") break;
      if (e.label == "f") {
        branch = true;
        break;
      }
    }
    const bool flip = u(rng) < spec.label_flip;
    const bool outcome = branch != flip;
    d.outcomes[t.case_id] = outcome ? "1" : "0";
    d.aux.rows[t.case_id] = {0.3 * (outcome ? 1.0 : 0.0) + gauss(rng), gauss(rng)};
  }
  d.log = add_noise(clean, spec.noise, spec.seed + 1);
  return d;
}

std::vector<SyntheticSpec> default_suite(std::uint64_t seed, std::size_t traces) {
  std::vector<SyntheticSpec> out;
  const std::size_t pairs[] = {2, 3, 4, 2, 3, 4};
  for (std::size_t i = 0; i < 6; ++i) {
    SyntheticSpec s;
    s.name = "concurrent_" + std::to_string(i + 1);
    s.interleaved_pairs = pairs[i];
    s.traces = traces;
    s.seed = seed * 1000 + i;
    out.push_back(s);
  }
  SyntheticSpec plain;
  plain.name = "no_concurrency";
  plain.interleaved_pairs = 0;
  plain.interleaved_branches = false;
  plain.traces = traces;
  plain.seed = seed * 1000 + 99;
  out.push_back(plain);
  return out;
}

void write_outcomes_csv(std::ostream& out, const std::map<std::string, std::string>& outcomes) {
  write_csv_row(out, {"case", "label"});
  for (const auto& [c, l] : outcomes) write_csv_row(out, {c, l});
}

void write_aux_csv(std::ostream& out, const AuxTable& aux) {
  std::vector<std::string> header{"case"};
  header.insert(header.end(), aux.columns.begin(), aux.columns.end());
  write_csv_row(out, header);
  for (const auto& [c, values] : aux.rows) {
    std::vector<std::string> row{c};
    for (double v : values) {
      std::ostringstream os;
      os << std::setprecision(17) << v;
      row.push_back(os.str());
    }
    write_csv_row(out, row);
  }
}

// ---- sweep ---------------------------------------------------------------

std::vector<double> grid_steps(double lo, double hi, double step) {
  if (!(step > 0.0) || lo > hi || lo < 0.0 || hi > 1.0) {
    throw Error(Errc::InvalidArgument, "grid must satisfy 0 <= lo <= hi <= 1 and step > 0");
  }
  std::vector<double> out;
  for (std::size_t i = 0;; ++i) {
    double v = lo + static_cast<double>(i) * step;
    if (v > hi + 1e-9) break;
    v = std::round(v * 1e9) / 1e9;
    out.push_back(std::min(v, hi));
  }
  return out;
}

SweepResult sweep(const EventLog& log, const SweepGrid& grid, const QualityOptions& quality) {
  for (const auto* axis : {&grid.p_star, &grid.eta, &grid.epsilon}) {
    if (axis->empty()) throw Error(Errc::InvalidArgument, "empty sweep axis");
    for (double v : *axis) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error(Errc::InvalidArgument, "grid values must lie in [0,1]");
    }
  }
  auto sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const auto ps = sorted(grid.p_star), es = sorted(grid.eta), fs = sorted(grid.epsilon);
  SweepResult result;
  std::optional<double> best;
  for (double p : ps) {
    const EventLog pre = preprocess(log, p);
    for (double eta : es) {
      for (double eps : fs) {
        SweepPoint pt{p, eta, eps, std::nullopt, {}};
        try {
          const PetriNet net = discover(pre, DiscoveryConfig{eta, eps});
          pt.quality = evaluate_model(net, pre, quality);
          if (!best || pt.quality->f_measure > *best) {
            best = pt.quality->f_measure;
            result.best = result.points.size();
          }
        } catch (const Error& e) {
          if (kind_of(e.code()) == ErrorKind::Budget) throw;
          pt.error = e.what();
        }
        result.points.push_back(std::move(pt));
      }
    }
  }
  if (!best) throw Error(Errc::InvalidArgument, "no sweep point could be evaluated");
  return result;
}

void write_sweep_csv(std::ostream& out, const SweepResult& result) {
  write_csv_row(out, {"p_star", "eta", "epsilon", "fitness", "precision", "f_measure", "size", "cfc",
                      "structuredness", "best", "error"});
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const auto& p = result.points[i];
    std::vector<std::string> row{fmt(p.p_star), fmt(p.eta), fmt(p.epsilon)};
    if (p.quality) {
      row.insert(row.end(), {fmt(p.quality->fitness), fmt(p.quality->precision), fmt(p.quality->f_measure),
                             std::to_string(p.quality->size), std::to_string(p.quality->cfc),
                             std::to_string(p.quality->structuredness)});
    } else {
      row.insert(row.end(), 6, "");
    }
    row.push_back(i == result.best ? "1" : "0");
    row.push_back(p.error);
    write_csv_row(out, row);
  }
}

nlohmann::json to_json(const SweepResult& result) {
  nlohmann::json j;
  auto points = nlohmann::json::array();
  for (const auto& p : result.points) {
    nlohmann::json pj{{"p_star", p.p_star}, {"eta", p.eta}, {"epsilon", p.epsilon}};
    if (p.quality) pj["quality"] = to_json(*p.quality);
    if (!p.error.empty()) pj["error"] = p.error;
    points.push_back(pj);
  }
  const auto& b = result.points.at(result.best);
  j["best"] = {{"p_star", b.p_star}, {"eta", b.eta}, {"epsilon", b.epsilon}, {"f_measure", b.quality->f_measure}};
  j["points"] = points;
  return j;
}

// ---- experiment ----------------------------------------------------------------

void ExperimentConfig::validate() const {
  if (!(p_star >= 0.0 && p_star <= 1.0)) throw Error(Errc::InvalidArgument, "p* must lie in [0,1]");
  discovery.validate();
  if (!(train_share > 0.0) || !(validation_share >= 0.0) || train_share + validation_share >= 1.0) {
    throw Error(Errc::InvalidArgument, "split shares must leave a non-empty test share");
  }
  if (!(beta > 0.0)) throw Error(Errc::InvalidArgument, "beta must be positive");
}

MlpConfig default_experiment_model() {
  MlpConfig c;
  BranchSpec tss;
  tss.slice.source = InputSlice::Source::Tss;
  tss.layers = {{32, 0.1}};
  BranchSpec aux;
  aux.slice.source = InputSlice::Source::Aux;
  aux.layers = {{4, 0.0}};
  c.branches = {tss, aux};
  c.trunk = {{16, 0.1}};
  c.classes = 2;
  c.learning_rate = 5e-3;
  c.epochs = 40;
  c.batch_size = 32;
  return c;
}

std::map<std::string, int> split_cases(const EventLog& log, double train_share, double validation_share,
                                       std::uint64_t seed) {
  std::vector<std::string> ids;
  for (const auto& t : log.traces()) ids.push_back(t.case_id);
  std::sort(ids.begin(), ids.end());
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  const auto n = static_cast<double>(ids.size());
  const auto n_train = static_cast<std::size_t>(std::floor(n * train_share));
  const auto n_val = static_cast<std::size_t>(std::floor(n * validation_share));
  std::map<std::string, int> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out[ids[i]] = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
  return out;
}

namespace {

Dataset select_rows(const FeatureMatrix& fm, const std::map<std::string, int>& split, int part) {
  Dataset d;
  d.cols = fm.cols;
  for (std::size_t r = 0; r < fm.rows; ++r) {
    if (split.at(fm.case_ids[r]) != part) continue;
    d.values.insert(d.values.end(), fm.row(r), fm.row(r) + fm.cols);
    d.targets.push_back(fm.targets[r]);
    ++d.rows;
  }
  return d;
}

EventLog sub_log(const EventLog& log, const std::map<std::string, int>& split, int part) {
  std::vector<Trace> traces;
  for (const auto& t : log.traces()) {
    if (split.at(t.case_id) == part) traces.push_back(t);
  }
  return EventLog(std::move(traces));
}

}  // namespace

ArmResult run_arm(const EventLog& log, const ExperimentDataset& dataset, const ExperimentConfig& config) {
  ArmResult arm;
  const PetriNet net = discover(log, config.discovery);
  arm.quality = evaluate_model(net, log, config.quality);
  arm.places = net.place_count();
  if (dataset.outcomes.empty()) {
    arm.note = "no outcome labels";
    return arm;
  }
  const auto split = split_cases(log, config.train_share, config.validation_share, config.seed);
  const DecayEstimate decay = estimate_decay_rates(net, sub_log(log, split, 0), config.beta);
  const auto samples = extract_tss(net, decay.state, log);
  TssMatrixOptions mo;
  mo.mode = TargetMode::Outcome;
  mo.outcomes = dataset.outcomes;
  const FeatureMatrix fm = tss_to_matrix(samples, dataset.aux, mo);
  if (fm.classes.size() != 2) {
    arm.note = "outcome is not binary";
    return arm;
  }
  MlpConfig mc = config.model.resolved(fm.tss_width, fm.aux_width);
  mc.classes = 2;
  mc.seed = config.seed;
  const Dataset train_set = select_rows(fm, split, 0);
  const Dataset val_set = select_rows(fm, split, 1);
  const Dataset test_set = select_rows(fm, split, 2);
  arm.test_cases = test_set.rows;
  const MlpModel model = train(train_set, mc, val_set);
  const auto proba = predict_proba(model, test_set);
  std::vector<double> scores;
  for (std::size_t r = 0; r < test_set.rows; ++r) scores.push_back(proba[r * 2 + 1]);
  std::size_t pos = 0;
  for (int t : test_set.targets) pos += t == 1;
  if (pos == 0 || pos == test_set.rows) {
    arm.note = "test split holds a single class";
    return arm;
  }
  arm.auc = delong_ci(scores, test_set.targets);
  return arm;
}

ExperimentRow run_dataset(const ExperimentDataset& dataset, const ExperimentConfig& config) {
  ExperimentRow row;
  row.name = dataset.name;
  row.p_star = config.p_star;
  try {
    row.before = run_arm(dataset.log, dataset, config);
    const ConcatPlan plan = plan_concatenation(dataset.log, config.p_star);
    for (const auto& p : plan.ordered_pairs) row.merged_pairs += p.merged;
    const EventLog after = apply_concatenation(dataset.log, plan);
    row.after = after == dataset.log ? row.before : run_arm(after, dataset, config);
  } catch (const Error& e) {
    if (kind_of(e.code()) == ErrorKind::Budget) throw;
    row.error = std::string(errc_name(e.code())) + ": " + e.what();
  }
  return row;
}

namespace {

struct Family {
  const char* name;
  std::optional<double> (*get)(const ArmResult&);
};

const Family kFamilies[] = {
    {"f_measure", [](const ArmResult& a) -> std::optional<double> { return a.quality.f_measure; }},
    {"size", [](const ArmResult& a) -> std::optional<double> { return static_cast<double>(a.quality.size); }},
    {"cfc", [](const ArmResult& a) -> std::optional<double> { return static_cast<double>(a.quality.cfc); }},
    {"structuredness",
     [](const ArmResult& a) -> std::optional<double> { return static_cast<double>(a.quality.structuredness); }},
    {"auc",
     [](const ArmResult& a) -> std::optional<double> {
       if (!a.auc) return std::nullopt;
       return a.auc->auc;
     }},
};

}  // namespace

ExperimentReport run_experiment(const std::vector<ExperimentDataset>& datasets, const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  if (config.parallel) {
    std::vector<std::future<ExperimentRow>> jobs;
    for (const auto& d : datasets) jobs.push_back(std::async(std::launch::async, run_dataset, std::cref(d), std::cref(config)));
    for (auto& j : jobs) report.rows.push_back(j.get());
  } else {
    for (const auto& d : datasets) report.rows.push_back(run_dataset(d, config));
  }
  for (const auto& fam : kFamilies) {
    std::vector<double> before, after;
    for (const auto& r : report.rows) {
      if (!r.before || !r.after) continue;
      const auto b = fam.get(*r.before);
      const auto a = fam.get(*r.after);
      if (!b || !a) continue;
      before.push_back(*b);
      after.push_back(*a);
    }
    WilcoxonCell cell;
    try {
      cell.result = wilcoxon_signed_rank(before, after);
    } catch (const Error& e) {
      cell.note = e.what();
    }
    report.wilcoxon[fam.name] = cell;
  }
  report.config = {{"p_star", config.p_star},
                   {"discovery", discovery_metadata(config.discovery)},
                   {"beta", config.beta},
                   {"split", {config.train_share, config.validation_share, 1.0 - config.train_share - config.validation_share}},
                   {"seed", config.seed},
                   {"model", to_json(config.model)}};
  return report;
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "markdown" || name == "md") return ReportFormat::Markdown;
  throw Error(Errc::InvalidArgument, "unknown report format '" + name + "' (json|csv|markdown)");
}

namespace {

nlohmann::json arm_json(const std::optional<ArmResult>& arm) {
  if (!arm) return nullptr;
  nlohmann::json j = to_json(arm->quality);
  j["places"] = arm->places;
  j["test_cases"] = arm->test_cases;
  j["auc"] = arm->auc ? to_json(*arm->auc) : nlohmann::json(nullptr);
  if (!arm->note.empty()) j["note"] = arm->note;
  return j;
}

const char* kColumns[] = {"fitness", "precision", "f_measure", "size", "cfc", "structuredness", "auc", "ci_low", "ci_high"};

std::vector<std::string> arm_cells(const std::optional<ArmResult>& arm) {
  if (!arm) return std::vector<std::string>(std::size(kColumns), "");
  const auto& q = arm->quality;
  std::vector<std::string> out{fmt(q.fitness), fmt(q.precision), fmt(q.f_measure), std::to_string(q.size),
                               std::to_string(q.cfc), std::to_string(q.structuredness)};
  if (arm->auc) {
    out.insert(out.end(), {fmt(arm->auc->auc), fmt(arm->auc->ci_low), fmt(arm->auc->ci_high)});
  } else {
    out.insert(out.end(), 3, "");
  }
  return out;
}

}  // namespace

nlohmann::json to_json(const ExperimentReport& report) {
  nlohmann::json j;
  j["config"] = report.config;
  auto rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json rj{{"name", r.name}, {"p_star", r.p_star}, {"merged_pairs", r.merged_pairs}};
    rj["before"] = arm_json(r.before);
    rj["after"] = arm_json(r.after);
    if (!r.error.empty()) rj["error"] = r.error;
    rows.push_back(rj);
  }
  j["rows"] = rows;
  nlohmann::json w;
  for (const auto& [name, cell] : report.wilcoxon) {
    if (cell.result) {
      w[name] = {{"p_value", cell.result->p_value},
                 {"statistic", cell.result->statistic},
                 {"n", cell.result->n},
                 {"exact", cell.result->exact}};
    } else {
      w[name] = {{"p_value", nullptr}, {"note", cell.note}};
    }
  }
  j["wilcoxon"] = w;
  return j;
}

std::string render_report(const ExperimentReport& report, ReportFormat format) {
  std::ostringstream os;
  if (format == ReportFormat::Json) {
    os << to_json(report).dump(2) << "\n";
    return os.str();
  }
  std::vector<std::string> header{"dataset", "p_star", "merged_pairs"};
  for (const char* side : {"before", "after"}) {
    for (const char* c : kColumns) header.push_back(std::string(c) + "_" + side);
  }
  header.push_back("error");
  std::vector<std::vector<std::string>> table;
  for (const auto& r : report.rows) {
    std::vector<std::string> row{r.name, fmt(r.p_star), std::to_string(r.merged_pairs)};
    for (const auto& arm : {r.before, r.after}) {
      const auto cells = arm_cells(arm);
      row.insert(row.end(), cells.begin(), cells.end());
    }
    row.push_back(r.error);
    table.push_back(row);
  }
  auto wilcoxon_value = [](const WilcoxonCell& c) { return c.result ? fmt(c.result->p_value) : std::string("NA"); };
  if (format == ReportFormat::Csv) {
    write_csv_row(os, header);
    for (const auto& row : table) write_csv_row(os, row);
    std::vector<std::string> w{"wilcoxon_p", "", ""};
    for (int side = 0; side < 2; ++side) {
      for (const char* c : kColumns) {
        auto it = report.wilcoxon.find(c);
        w.push_back(side == 1 && it != report.wilcoxon.end() ? wilcoxon_value(it->second) : "");
      }
    }
    w.push_back("");
    write_csv_row(os, w);
    return os.str();
  }
  auto md_row = [&](const std::vector<std::string>& cells) {
    os << "|";
    for (const auto& c : cells) os << " " << c << " |";
    os << "\n";
  };
  md_row(header);
  os << "|";
  for (std::size_t i = 0; i < header.size(); ++i) os << " --- |";
  os << "\n";
  for (const auto& row : table) md_row(row);
  os << "\n| metric | wilcoxon p | n | note |\n| --- | --- | --- | --- |\n";
  for (const auto& [name, cell] : report.wilcoxon) {
    os << "| " << name << " | " << wilcoxon_value(cell) << " | " << (cell.result ? std::to_string(cell.result->n) : "")
       << " | " << cell.note << " |\n";
  }
  return os.str();
}

}  // namespace procat

namespace procat {

namespace {

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(Errc::Io, "cannot open " + p.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw Error(Errc::Io, "cannot write " + p.string());
  return out;
}

}  // namespace

Manifest load_manifest(const std::string& path, const CsvConfig& csv) {
  auto in = open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("bad manifest: ") + e.what());
  }
  const auto base = std::filesystem::path(path).parent_path();
  Manifest m;
  try {
    for (const auto& dj : j.at("datasets")) {
      ExperimentDataset d;
      d.name = dj.at("name").get<std::string>();
      d.log = normalize_timestamps(read_csv_file((base / dj.at("log").get<std::string>()).string(), csv));
      if (dj.contains("outcomes")) {
        auto oin = open_in(base / dj.at("outcomes").get<std::string>());
        d.outcomes = read_outcomes_csv(oin);
      }
      if (dj.contains("aux")) {
        auto ain = open_in(base / dj.at("aux").get<std::string>());
        d.aux = read_aux_csv(ain);
      }
      m.datasets.push_back(std::move(d));
    }
    if (j.contains("model")) m.model = mlp_config_from_json(j.at("model"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("bad manifest: ") + e.what());
  }
  return m;
}

void write_suite(const std::string& dir, const std::vector<SyntheticSpec>& specs) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["datasets"] = nlohmann::json::array();
  for (const auto& spec : specs) {
    const SyntheticDataset d = make_synthetic(spec);
    const std::filesystem::path base(dir);
    {
      auto out = open_out(base / (d.name + ".csv"));
      write_csv(out, d.log);
    }
    {
      auto out = open_out(base / (d.name + "_outcomes.csv"));
      write_outcomes_csv(out, d.outcomes);
    }
    {
      auto out = open_out(base / (d.name + "_aux.csv"));
      write_aux_csv(out, d.aux);
    }
    manifest["datasets"].push_back({{"name", d.name},
                                    {"log", d.name + ".csv"},
                                    {"outcomes", d.name + "_outcomes.csv"},
                                    {"aux", d.name + "_aux.csv"}});
  }
  auto out = open_out(std::filesystem::path(dir) / "manifest.json");
  out << manifest.dump(2) << "\n";
}

std::vector<ExperimentDataset> synthetic_datasets(const std::vector<SyntheticSpec>& specs) {
  std::vector<ExperimentDataset> out;
  for (const auto& spec : specs) {
    SyntheticDataset d = make_synthetic(spec);
    out.push_back({d.name, std::move(d.log), std::move(d.outcomes), std::move(d.aux)});
  }
  return out;
}

namespace {

// One row per sample (or per case in outcome mode) with aux appended.
std::vector<const TimedStateSample*> chosen_samples(const std::vector<TimedStateSample>& samples, TargetMode mode) {
  std::vector<const TimedStateSample*> out;
  if (mode == TargetMode::NextEvent) {
    for (const auto& s : samples) out.push_back(&s);
    return out;
  }
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
  for (const auto& c : order) out.push_back(&samples[last[c]]);
  return out;
}

}  // namespace

TrainedPredictor train_on_samples(const std::vector<TimedStateSample>& samples, const AuxTable& aux,
                                  const std::map<std::string, std::string>& outcomes, const MlpConfig& config,
                                  double validation_share) {
  if (samples.empty()) throw Error(Errc::EmptyLog, "no samples to train on");
  TrainedPredictor tp;
  tp.mode = outcomes.empty() ? TargetMode::NextEvent : TargetMode::Outcome;
  TssMatrixOptions mo;
  mo.mode = tp.mode;
  mo.outcomes = outcomes;
  const FeatureMatrix fm = tss_to_matrix(samples, aux, mo);
  if (fm.classes.size() < 2) throw Error(Errc::DegenerateLabels, "targets hold fewer than two classes");
  tp.classes = fm.classes;
  MlpConfig mc = config.resolved(fm.tss_width, fm.aux_width);
  mc.classes = fm.classes.size();

  std::set<std::string> ids(fm.case_ids.begin(), fm.case_ids.end());
  std::vector<std::string> order(ids.begin(), ids.end());
  std::mt19937_64 rng(mc.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(order.size()) * validation_share));
  const std::set<std::string> val_ids(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  Dataset train_set, val_set;
  train_set.cols = val_set.cols = fm.cols;
  for (std::size_t r = 0; r < fm.rows; ++r) {
    Dataset& d = val_ids.count(fm.case_ids[r]) ? val_set : train_set;
    d.values.insert(d.values.end(), fm.row(r), fm.row(r) + fm.cols);
    d.targets.push_back(fm.targets[r]);
    ++d.rows;
  }
  tp.model = train(train_set, mc, val_set);
  return tp;
}

std::vector<Prediction> predict_samples(const TrainedPredictor& predictor, const std::vector<TimedStateSample>& samples,
                                        const AuxTable& aux) {
  std::vector<Prediction> out;
  const std::size_t width = predictor.model.input_width();
  Dataset d;
  d.cols = width;
  for (const auto* s : chosen_samples(samples, predictor.mode)) {
    auto row = s->features();
    if (aux.width() > 0) {
      auto it = aux.rows.find(s->case_id);
      if (it != aux.rows.end()) {
        row.insert(row.end(), it->second.begin(), it->second.end());
      } else {
        row.insert(row.end(), aux.width(), 0.0);
      }
    }
    if (row.size() != width) {
      throw Error(Errc::DimensionMismatch, "sample width " + std::to_string(row.size()) + " does not match model input " +
                                               std::to_string(width));
    }
    d.values.insert(d.values.end(), row.begin(), row.end());
    d.targets.push_back(0);
    ++d.rows;
    out.push_back({s->case_id, s->event_index, {}});
  }
  const auto proba = predict_proba(predictor.model, d);
  const std::size_t k = predictor.model.classes();
  for (std::size_t r = 0; r < out.size(); ++r) {
    out[r].proba.assign(proba.begin() + static_cast<std::ptrdiff_t>(r * k),
                        proba.begin() + static_cast<std::ptrdiff_t>((r + 1) * k));
  }
  return out;
}

void write_predictions_csv(std::ostream& out, const TrainedPredictor& predictor, const std::vector<Prediction>& rows) {
  std::vector<std::string> header{"case", "idx"};
  for (const auto& c : predictor.classes) header.push_back("p_" + c);
  header.push_back("predicted");
  write_csv_row(out, header);
  for (const auto& r : rows) {
    std::vector<std::string> cells{r.case_id, std::to_string(r.event_index)};
    for (double p : r.proba) cells.push_back(fmt(p));
    const auto best = std::max_element(r.proba.begin(), r.proba.end()) - r.proba.begin();
    cells.push_back(predictor.classes.at(static_cast<std::size_t>(best)));
    write_csv_row(out, cells);
  }
}

nlohmann::json to_json(const TrainedPredictor& predictor) {
  return {{"mode", predictor.mode == TargetMode::Outcome ? "outcome" : "next_event"},
          {"classes", predictor.classes},
          {"model", to_json(predictor.model)}};
}

TrainedPredictor predictor_from_json(const nlohmann::json& j) {
  try {
    TrainedPredictor tp;
    tp.mode = j.at("mode").get<std::string>() == "outcome" ? TargetMode::Outcome : TargetMode::NextEvent;
    tp.classes = j.at("classes").get<std::vector<std::string>>();
    tp.model = mlp_model_from_json(j.at("model"));
    if (tp.classes.size() != tp.model.classes()) throw Error(Errc::DimensionMismatch, "class list does not match model");
    return tp;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidArgument, std::string("bad model file: ") + e.what());
  }
}

}  // namespace procat
