#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "procat/procat.h"

namespace {

struct Failure {
  procat_status status;
};

void check(procat_status s) {
  if (s != PROCAT_OK) throw Failure{s};
}

struct Owned {
  char* p = nullptr;
  ~Owned() { procat_string_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

using LogPtr = std::unique_ptr<procat_log, decltype(&procat_log_free)>;
using NetPtr = std::unique_ptr<procat_net, decltype(&procat_net_free)>;
using ModelPtr = std::unique_ptr<procat_model, decltype(&procat_model_free)>;

LogPtr read_log(const std::string& path, const std::string& ts_format) {
  procat_log* log = nullptr;
  check(procat_log_read_csv(path.c_str(), ts_format.c_str(), 1, &log));
  return LogPtr(log, procat_log_free);
}

NetPtr read_net(const std::string& path) {
  procat_net* net = nullptr;
  check(procat_net_read(path.c_str(), &net));
  return NetPtr(net, procat_net_free);
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) {
    std::cerr << "error: Io: cannot write " << path << "\n";
    throw Failure{PROCAT_ERR_IO};
  }
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

// Renders a flat JSON object in the requested report format.
std::string scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (!v.is_array()) return v.dump();
  // arrays of scalars are space-separated
  std::string out;
  for (const auto& e : v) out += (out.empty() ? "" : " ") + scalar_text(e);
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string render_flat(const std::string& json_text, const std::string& format) {
  if (format == "json") return json_text;
  const auto j = nlohmann::json::parse(json_text);
  std::vector<std::string> keys, values;
  for (const auto& [k, v] : j.items()) {
    keys.push_back(k);
    values.push_back(scalar_text(v));
  }
  std::ostringstream os;
  if (format == "csv") {
    for (std::size_t i = 0; i < keys.size(); ++i) os << (i ? "," : "") << csv_field(keys[i]);
    os << "\n";
    for (std::size_t i = 0; i < values.size(); ++i) os << (i ? "," : "") << csv_field(values[i]);
    os << "\n";
  } else {
    os << "| metric | value |\n| --- | --- |\n";
    for (std::size_t i = 0; i < keys.size(); ++i) os << "| " << keys[i] << " | " << values[i] << " |\n";
  }
  return os.str();
}

std::vector<double> parse_grid(const std::string& spec) {
  // "lo:hi:step" or a comma list
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    double lo = 0, hi = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream in(spec);
    if (!(in >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0) || lo > hi) {
      throw CLI::ValidationError("grid", "expected lo:hi:step, got '" + spec + "'");
    }
    for (std::size_t i = 0;; ++i) {
      const double v = lo + static_cast<double>(i) * step;
      if (v > hi + 1e-9) break;
      out.push_back(std::round(v * 1e9) / 1e9);
    }
    return out;
  }
  std::istringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(std::stod(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"procat: event-log concatenation, discovery, decay features and prediction"};
  app.require_subcommand(1);
  app.fallthrough();

  procat_params params;
  procat_params_default(&params);
  std::string report_format = "json";
  std::string ts_format = "ms";
  app.add_option("--seed", params.seed, "random seed")->capture_default_str();
  app.add_option("--p-star", params.p_star, "concatenation threshold p*")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  app.add_option("--eta", params.eta, "concurrency threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  app.add_option("--epsilon", params.epsilon, "edge filter threshold")->capture_default_str()->check(CLI::Range(0.0, 1.0));
  app.add_option("--report", report_format, "report format json|csv|markdown (evaluate also accepts an output path)")
      ->capture_default_str();
  app.add_option("--ts-format", ts_format, "timestamp format of input CSV files")
      ->check(CLI::IsMember({"ms", "rfc3339"}))
      ->capture_default_str();

  std::string in_path, out_path, extra_path, plan_path, dot_path, config_path, aux_path, outcomes_path, decay_path;
  bool dot = false, no_fallback = false;
  double beta = 1.0;
  std::size_t traces = 0, max_states = 0;
  std::string p_grid = "0:1:0.1", eta_grid, eps_grid;

  auto* ingest = app.add_subcommand("ingest", "parse and normalize a CSV log; print a summary");
  ingest->add_option("log", in_path, "input CSV")->required();
  ingest->add_option("out", out_path, "normalized CSV output");

  auto* pre = app.add_subcommand("preprocess", "apply the concatenation pre-processor");
  pre->add_option("log", in_path)->required();
  pre->add_option("out", out_path)->required();
  pre->add_option("--plan", plan_path, "write the concatenation plan as JSON");

  auto* dfg = app.add_subcommand("dfg", "directly-follows graph");
  dfg->add_option("log", in_path)->required();
  dfg->add_flag("--dot", dot, "Graphviz output instead of JSON");
  dfg->add_option("-o,--output", out_path);

  auto* disc = app.add_subcommand("discover", "discover a Petri net");
  disc->add_option("log", in_path)->required();
  disc->add_option("out", out_path, "net JSON (stdout when omitted)");
  disc->add_option("--dot", dot_path, "also write Graphviz");

  auto* eval = app.add_subcommand("evaluate", "fitness, precision, F-measure and complexity of a net on a log");
  eval->add_option("net", in_path)->required();
  eval->add_option("log", extra_path)->required();
  eval->add_option("-o,--output", out_path);
  eval->add_flag("--no-fallback", no_fallback, "fail (exit 3) instead of falling back to token replay");
  eval->add_option("--max-states", max_states, "alignment state cap");

  auto* tss = app.add_subcommand("tss", "timed state samples of a log replayed on a net");
  tss->add_option("net", in_path)->required();
  tss->add_option("log", extra_path)->required();
  tss->add_option("out", out_path, "samples CSV")->required();
  tss->add_option("--decay", decay_path, "write decay parameters as JSON");
  tss->add_option("--beta", beta, "decay ceiling")->capture_default_str();

  auto* tr = app.add_subcommand("train", "train a classifier on timed state samples");
  tr->add_option("--config", config_path, "model configuration JSON");
  tr->add_option("tss", in_path)->required();
  tr->add_option("model", out_path)->required();
  tr->add_option("--aux", aux_path, "auxiliary features CSV (case,...)");
  tr->add_option("--outcomes", outcomes_path, "outcome labels CSV (case,label)");

  auto* pred = app.add_subcommand("predict", "class probabilities for timed state samples");
  pred->add_option("model", in_path)->required();
  pred->add_option("tss", extra_path)->required();
  pred->add_option("-o,--output", out_path);
  pred->add_option("--aux", aux_path);

  auto* sw = app.add_subcommand("sweep", "grid search over p*, eta and epsilon");
  sw->add_option("log", in_path)->required();
  sw->add_option("--p-grid", p_grid, "lo:hi:step or comma list")->capture_default_str();
  sw->add_option("--eta-grid", eta_grid, "defaults to --eta");
  sw->add_option("--eps-grid", eps_grid, "defaults to --epsilon");
  sw->add_option("--grid-out", extra_path, "full grid CSV");
  sw->add_option("-o,--output", out_path, "best point");

  auto* exp = app.add_subcommand("experiment", "raw versus pre-processed comparison over datasets");
  exp->add_option("manifest", in_path, "dataset manifest JSON (built-in synthetic suite when omitted)");
  exp->add_option("--traces", traces, "traces per synthetic dataset");
  exp->add_option("--model", config_path, "model configuration JSON");
  exp->add_option("-o,--output", out_path);

  auto* synth = app.add_subcommand("synth", "write the synthetic suite to a directory");
  synth->add_option("dir", out_path)->required();
  synth->add_option("--traces", traces, "traces per dataset");

  auto* self = app.add_subcommand("self-check", "run the oracle suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const bool format_ok = report_format == "json" || report_format == "csv" || report_format == "markdown";
  if (!format_ok && !eval->parsed()) {
    std::cerr << "error: --report must be json, csv or markdown\n";
    return 2;
  }

  try {
    if (ingest->parsed()) {
      auto log = read_log(in_path, ts_format);
      Owned s;
      check(procat_log_summary_json(log.get(), &s.p));
      if (!out_path.empty()) check(procat_log_write_csv(log.get(), out_path.c_str(), ts_format.c_str()));
      std::cout << render_flat(s.str(), report_format) << (report_format == "json" ? "\n" : "");
    } else if (pre->parsed()) {
      auto log = read_log(in_path, ts_format);
      procat_log* result = nullptr;
      Owned plan;
      check(procat_preprocess(log.get(), params.p_star, &result, &plan.p));
      LogPtr owned(result, procat_log_free);
      check(procat_log_write_csv(result, out_path.c_str(), ts_format.c_str()));
      if (!plan_path.empty()) emit(plan.str(), plan_path);
    } else if (dfg->parsed()) {
      auto log = read_log(in_path, ts_format);
      Owned s;
      check(procat_dfg(log.get(), dot ? 1 : 0, &s.p));
      emit(s.str(), out_path);
    } else if (disc->parsed()) {
      auto log = read_log(in_path, ts_format);
      procat_net* net = nullptr;
      check(procat_discover(log.get(), &params, &net));
      NetPtr owned(net, procat_net_free);
      Owned json;
      check(procat_net_to_json(net, &json.p));
      emit(json.str(), out_path);
      if (!dot_path.empty()) {
        Owned d;
        check(procat_net_to_dot(net, &d.p));
        emit(d.str(), dot_path);
      }
    } else if (eval->parsed()) {
      auto net = read_net(in_path);
      auto log = read_log(extra_path, ts_format);
      Owned s;
      check(procat_evaluate(net.get(), log.get(), no_fallback ? 0 : 1, max_states, &s.p));
      if (format_ok) {
        emit(render_flat(s.str(), report_format), out_path);
      } else {
        emit(s.str(), report_format);  // --report <path>
      }
    } else if (tss->parsed()) {
      auto net = read_net(in_path);
      auto log = read_log(extra_path, ts_format);
      Owned csv, decay;
      check(procat_tss(net.get(), log.get(), beta, &csv.p, &decay.p));
      emit(csv.str(), out_path);
      if (!decay_path.empty()) emit(decay.str(), decay_path);
    } else if (tr->parsed()) {
      std::string config;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
          std::cerr << "error: Io: cannot open " << config_path << "\n";
          return 2;
        }
        std::ostringstream os;
        os << in.rdbuf();
        config = os.str();
      }
      procat_model* model = nullptr;
      check(procat_train(in_path.c_str(), config.empty() ? nullptr : config.c_str(),
                         aux_path.empty() ? nullptr : aux_path.c_str(),
                         outcomes_path.empty() ? nullptr : outcomes_path.c_str(), params.seed, &model));
      ModelPtr owned(model, procat_model_free);
      Owned json;
      check(procat_model_to_json(model, &json.p));
      emit(json.str(), out_path);
    } else if (pred->parsed()) {
      procat_model* model = nullptr;
      check(procat_model_read(in_path.c_str(), &model));
      ModelPtr owned(model, procat_model_free);
      Owned csv;
      check(procat_predict(model, extra_path.c_str(), aux_path.empty() ? nullptr : aux_path.c_str(), &csv.p));
      emit(csv.str(), out_path);
    } else if (sw->parsed()) {
      auto log = read_log(in_path, ts_format);
      std::vector<double> ps, es, fs;
      try {
        ps = parse_grid(p_grid);
        es = eta_grid.empty() ? std::vector<double>{params.eta} : parse_grid(eta_grid);
        fs = eps_grid.empty() ? std::vector<double>{params.epsilon} : parse_grid(eps_grid);
      } catch (const std::exception& e) {
        std::cerr << "error: InvalidArgument: " << e.what() << "\n";
        return 2;
      }
      Owned grid, best;
      check(procat_sweep(log.get(), ps.data(), ps.size(), es.data(), es.size(), fs.data(), fs.size(), &grid.p, &best.p));
      if (!extra_path.empty()) emit(grid.str(), extra_path);
      emit(render_flat(best.str(), report_format), out_path);
    } else if (exp->parsed()) {
      std::string config;
      if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) {
          std::cerr << "error: Io: cannot open " << config_path << "\n";
          return 2;
        }
        std::ostringstream os;
        os << in.rdbuf();
        config = os.str();
      }
      Owned report;
      check(procat_experiment(in_path.empty() ? nullptr : in_path.c_str(), &params,
                              config.empty() ? nullptr : config.c_str(), traces, report_format.c_str(), &report.p));
      emit(report.str(), out_path);
    } else if (synth->parsed()) {
      check(procat_write_suite(out_path.c_str(), params.seed, traces));
    } else if (self->parsed()) {
      Owned table;
      int ok = 0;
      check(procat_self_check(params.seed, &table.p, &ok));
      std::cout << table.str();
      return ok ? 0 : 1;
    }
  } catch (const Failure& f) {
    if (f.status != PROCAT_ERR_IO || procat_last_error()[0] != '\0') {
      const std::string name = procat_status_name(f.status), msg = procat_last_error();
      std::cerr << "error: ";
      if (msg.rfind(name, 0) != 0) std::cerr << name << ": ";
      std::cerr << msg;
      if (procat_last_error_index() >= 0) std::cerr << " (index " << procat_last_error_index() << ")";
      std::cerr << "\n";
    }
    return procat_exit_code(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
