#include "procat/procat.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "procat/concat.hpp"
#include "procat/discovery.hpp"
#include "procat/dream.hpp"
#include "procat/error.hpp"
#include "procat/event_log.hpp"
#include "procat/metrics.hpp"
#include "procat/pipeline.hpp"
#include "procat/relations.hpp"
#include "testkit.hpp"

struct procat_log {
  procat::EventLog log;
};
struct procat_net {
  procat::PetriNet net;
};
struct procat_model {
  procat::TrainedPredictor predictor;
};

namespace {

static_assert(static_cast<int>(procat::Errc::Io) + 1 == PROCAT_ERR_IO);

thread_local std::string g_error;
thread_local long long g_index = -1;

procat_status fail(procat_status s, const std::string& message, long long index = -1) {
  g_error = message;
  g_index = index;
  return s;
}

template <class F>
procat_status guarded(F&& body) {
  g_error.clear();
  g_index = -1;
  try {
    body();
    return PROCAT_OK;
  } catch (const procat::Error& e) {
    const auto idx = e.index();
    return fail(static_cast<procat_status>(static_cast<int>(e.code()) + 1), e.what(),
                idx ? static_cast<long long>(*idx) : -1);
  } catch (const nlohmann::json::exception& e) {
    return fail(PROCAT_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(PROCAT_ERR_INTERNAL, e.what());
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw procat::Error(procat::Errc::InvalidArgument, std::string(what) + " must not be null");
}

procat::CsvConfig csv_config(const char* ts_format) {
  procat::CsvConfig c;
  c.format = procat::parse_timestamp_format(ts_format ? ts_format : "ms");
  return c;
}

std::string slurp(const char* path) {
  std::ifstream in(path);
  if (!in) throw procat::Error(procat::Errc::Io, std::string("cannot open ") + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

procat::DiscoveryConfig discovery_config(const procat_params* params) {
  procat::DiscoveryConfig c;
  if (params) {
    c.eta = params->eta;
    c.epsilon = params->epsilon;
  }
  c.validate();
  return c;
}

}  // namespace

extern "C" {

const char* procat_version(void) { return "1.0.0"; }

const char* procat_status_name(procat_status status) {
  if (status == PROCAT_OK) return "Ok";
  if (status == PROCAT_ERR_INTERNAL) return "Internal";
  if (status < PROCAT_ERR_MALFORMED_ROW || status > PROCAT_ERR_IO) return "Unknown";
  return procat::errc_name(static_cast<procat::Errc>(static_cast<int>(status) - 1));
}

int procat_exit_code(procat_status status) {
  if (status == PROCAT_OK) return 0;
  if (status == PROCAT_ERR_SEARCH_BUDGET_EXCEEDED || status == PROCAT_ERR_BUDGET_EXCEEDED) return 3;
  return 2;
}

const char* procat_last_error(void) { return g_error.c_str(); }

long long procat_last_error_index(void) { return g_index; }

void procat_string_free(char* s) { std::free(s); }

void procat_params_default(procat_params* params) {
  if (!params) return;
  params->p_star = procat::kDefaultPStar;
  params->eta = procat::kDefaultEta;
  params->epsilon = procat::kDefaultEpsilon;
  params->seed = 1;
}

procat_status procat_log_read_csv(const char* path, const char* ts_format, int normalize, procat_log** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto log = procat::read_csv_file(path, csv_config(ts_format));
    if (normalize) log = procat::normalize_timestamps(log);
    *out = new procat_log{std::move(log)};
  });
}

procat_status procat_log_parse_csv(const char* text, const char* ts_format, int normalize, procat_log** out) {
  return guarded([&] {
    require(text, "text");
    require(out, "out");
    std::istringstream in(text);
    auto log = procat::parse_csv(in, csv_config(ts_format));
    if (normalize) log = procat::normalize_timestamps(log);
    *out = new procat_log{std::move(log)};
  });
}

procat_status procat_log_write_csv(const procat_log* log, const char* path, const char* ts_format) {
  return guarded([&] {
    require(log, "log");
    require(path, "path");
    std::ofstream f(path);
    if (!f) throw procat::Error(procat::Errc::Io, std::string("cannot write ") + path);
    procat::write_csv(f, log->log, csv_config(ts_format).format);
  });
}

procat_status procat_log_to_csv(const procat_log* log, const char* ts_format, char** out) {
  return guarded([&] {
    require(log, "log");
    require(out, "out");
    std::ostringstream os;
    procat::write_csv(os, log->log, csv_config(ts_format).format);
    *out = dup(os.str());
  });
}

procat_status procat_log_summary_json(const procat_log* log, char** out) {
  return guarded([&] {
    require(log, "log");
    require(out, "out");
    const auto& l = log->log;
    nlohmann::json j{{"traces", l.size()},
                     {"events", l.event_count()},
                     {"labels", l.label_universe()},
                     {"normalized", l.is_normalized()}};
    std::size_t longest = 0;
    for (const auto& t : l.traces()) longest = std::max(longest, t.events.size());
    j["max_trace_length"] = longest;
    *out = dup(j.dump(2));
  });
}

size_t procat_log_trace_count(const procat_log* log) { return log ? log->log.size() : 0; }

size_t procat_log_event_count(const procat_log* log) { return log ? log->log.event_count() : 0; }

void procat_log_free(procat_log* log) { delete log; }

procat_status procat_preprocess(const procat_log* log, double p_star, procat_log** out, char** plan_json) {
  return guarded([&] {
    require(log, "log");
    require(out, "out");
    if (!(p_star >= 0.0 && p_star <= 1.0)) throw procat::Error(procat::Errc::InvalidArgument, "p* must lie in [0,1]");
    const auto plan = procat::plan_concatenation(log->log, p_star);
    auto result = procat::apply_concatenation(log->log, plan);
    std::string plan_text = procat::to_json(plan).dump(2);
    auto* handle = new procat_log{std::move(result)};
    if (plan_json) {
      try {
        *plan_json = dup(plan_text);
      } catch (...) {
        delete handle;
        throw;
      }
    }
    *out = handle;
  });
}

procat_status procat_dfg(const procat_log* log, int dot, char** out) {
  return guarded([&] {
    require(log, "log");
    require(out, "out");
    const auto dfg = procat::build_dfg(log->log);
    *out = dup(dot ? procat::to_dot(dfg) : procat::to_json(dfg).dump(2));
  });
}

procat_status procat_discover(const procat_log* log, const procat_params* params, procat_net** out) {
  return guarded([&] {
    require(log, "log");
    require(out, "out");
    *out = new procat_net{procat::discover(log->log, discovery_config(params))};
  });
}

procat_status procat_net_from_json(const char* json, procat_net** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new procat_net{procat::net_from_json(nlohmann::json::parse(json))};
  });
}

procat_status procat_net_read(const char* path, procat_net** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new procat_net{procat::net_from_json(nlohmann::json::parse(slurp(path)))};
  });
}

procat_status procat_net_to_json(const procat_net* net, char** out) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    *out = dup(procat::to_json(net->net).dump(2));
  });
}

procat_status procat_net_to_dot(const procat_net* net, char** out) {
  return guarded([&] {
    require(net, "net");
    require(out, "out");
    *out = dup(procat::to_dot(net->net));
  });
}

void procat_net_free(procat_net* net) { delete net; }

procat_status procat_evaluate(const procat_net* net, const procat_log* log, int allow_fallback, size_t max_states,
                              char** report_json) {
  return guarded([&] {
    require(net, "net");
    require(log, "log");
    require(report_json, "report_json");
    procat::QualityOptions opts;
    if (max_states > 0) opts.alignment.max_states = max_states;
    const auto q = procat::evaluate_model(net->net, log->log, opts);
    if (!allow_fallback && q.fallback_traces > 0) {
      throw procat::Error(procat::Errc::SearchBudgetExceeded,
                          std::to_string(q.fallback_traces) + " traces exceeded the alignment state cap");
    }
    *report_json = dup(procat::to_json(q).dump(2));
  });
}

procat_status procat_tss(const procat_net* net, const procat_log* log, double beta, char** tss_csv, char** decay_json) {
  return guarded([&] {
    require(net, "net");
    require(log, "log");
    require(tss_csv, "tss_csv");
    const auto estimate = procat::estimate_decay_rates(net->net, log->log, beta);
    const auto samples = procat::extract_tss(net->net, estimate.state, log->log);
    std::ostringstream os;
    procat::write_tss_csv(os, samples);
    std::string decay = procat::to_json(estimate, net->net).dump(2);
    char* csv = dup(os.str());
    if (decay_json) {
      try {
        *decay_json = dup(decay);
      } catch (...) {
        std::free(csv);
        throw;
      }
    }
    *tss_csv = csv;
  });
}

procat_status procat_train(const char* tss_csv_path, const char* config_json, const char* aux_path,
                           const char* outcomes_path, uint64_t seed, procat_model** out) {
  return guarded([&] {
    require(tss_csv_path, "tss_csv_path");
    require(out, "out");
    std::ifstream tin(tss_csv_path);
    if (!tin) throw procat::Error(procat::Errc::Io, std::string("cannot open ") + tss_csv_path);
    const auto samples = procat::read_tss_csv(tin);
    procat::AuxTable aux;
    if (aux_path) {
      std::ifstream in(aux_path);
      if (!in) throw procat::Error(procat::Errc::Io, std::string("cannot open ") + aux_path);
      aux = procat::read_aux_csv(in);
    }
    std::map<std::string, std::string> outcomes;
    if (outcomes_path) {
      std::ifstream in(outcomes_path);
      if (!in) throw procat::Error(procat::Errc::Io, std::string("cannot open ") + outcomes_path);
      outcomes = procat::read_outcomes_csv(in);
    }
    auto config = config_json ? procat::mlp_config_from_json(nlohmann::json::parse(config_json))
                              : procat::default_experiment_model();
    config.seed = seed;
    *out = new procat_model{procat::train_on_samples(samples, aux, outcomes, config)};
  });
}

procat_status procat_model_from_json(const char* json, procat_model** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new procat_model{procat::predictor_from_json(nlohmann::json::parse(json))};
  });
}

procat_status procat_model_read(const char* path, procat_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new procat_model{procat::predictor_from_json(nlohmann::json::parse(slurp(path)))};
  });
}

procat_status procat_model_to_json(const procat_model* model, char** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    *out = dup(procat::to_json(model->predictor).dump());
  });
}

procat_status procat_predict(const procat_model* model, const char* tss_csv_path, const char* aux_path,
                             char** predictions_csv) {
  return guarded([&] {
    require(model, "model");
    require(tss_csv_path, "tss_csv_path");
    require(predictions_csv, "predictions_csv");
    std::ifstream tin(tss_csv_path);
    if (!tin) throw procat::Error(procat::Errc::Io, std::string("cannot open ") + tss_csv_path);
    const auto samples = procat::read_tss_csv(tin);
    procat::AuxTable aux;
    if (aux_path) {
      std::ifstream in(aux_path);
      if (!in) throw procat::Error(procat::Errc::Io, std::string("cannot open ") + aux_path);
      aux = procat::read_aux_csv(in);
    }
    const auto rows = procat::predict_samples(model->predictor, samples, aux);
    std::ostringstream os;
    procat::write_predictions_csv(os, model->predictor, rows);
    *predictions_csv = dup(os.str());
  });
}

void procat_model_free(procat_model* model) { delete model; }

procat_status procat_sweep(const procat_log* log, const double* p_star, size_t n_p, const double* eta, size_t n_eta,
                           const double* epsilon, size_t n_eps, char** grid_csv, char** best_json) {
  return guarded([&] {
    require(log, "log");
    require(grid_csv, "grid_csv");
    if ((n_p && !p_star) || (n_eta && !eta) || (n_eps && !epsilon)) {
      throw procat::Error(procat::Errc::InvalidArgument, "grid axis pointer is null");
    }
    procat::SweepGrid grid;
    if (n_p) grid.p_star.assign(p_star, p_star + n_p);
    if (n_eta) grid.eta.assign(eta, eta + n_eta);
    if (n_eps) grid.epsilon.assign(epsilon, epsilon + n_eps);
    const auto result = procat::sweep(log->log, grid);
    std::ostringstream os;
    procat::write_sweep_csv(os, result);
    std::string best = procat::to_json(result).at("best").dump(2);
    char* csv = dup(os.str());
    if (best_json) {
      try {
        *best_json = dup(best);
      } catch (...) {
        std::free(csv);
        throw;
      }
    }
    *grid_csv = csv;
  });
}

procat_status procat_experiment(const char* manifest_path, const procat_params* params, const char* model_config_json,
                                size_t traces, const char* format, char** report) {
  return guarded([&] {
    require(report, "report");
    procat_params p;
    procat_params_default(&p);
    if (params) p = *params;
    procat::ExperimentConfig config;
    config.p_star = p.p_star;
    config.discovery = discovery_config(&p);
    config.seed = p.seed;
    config.model = procat::default_experiment_model();
    std::vector<procat::ExperimentDataset> datasets;
    if (manifest_path) {
      auto manifest = procat::load_manifest(manifest_path);
      datasets = std::move(manifest.datasets);
      if (manifest.model) config.model = *manifest.model;
    } else {
      datasets = procat::synthetic_datasets(procat::default_suite(p.seed, traces ? traces : 200));
    }
    if (model_config_json) config.model = procat::mlp_config_from_json(nlohmann::json::parse(model_config_json));
    const auto result = procat::run_experiment(datasets, config);
    *report = dup(procat::render_report(result, procat::parse_report_format(format ? format : "json")));
  });
}

procat_status procat_write_suite(const char* dir, uint64_t seed, size_t traces) {
  return guarded([&] {
    require(dir, "dir");
    procat::write_suite(dir, procat::default_suite(seed, traces ? traces : 200));
  });
}

procat_status procat_self_check(uint64_t seed, char** table, int* all_passed) {
  return guarded([&] {
    require(table, "table");
    const auto rows = procat::testkit::self_check(seed);
    std::ostringstream os;
    bool ok = true;
    std::size_t width = 0;
    for (const auto& r : rows) width = std::max(width, r.name.size());
    for (const auto& r : rows) {
      os << (r.passed ? "PASS  " : "FAIL  ") << r.name << std::string(width - r.name.size() + 2, ' ') << r.detail
         << "\n";
      ok = ok && r.passed;
    }
    *table = dup(os.str());
    if (all_passed) *all_passed = ok ? 1 : 0;
  });
}

}  // extern "C"
