#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "procat/discovery.hpp"
#include "procat/dream.hpp"
#include "procat/event_log.hpp"
#include "procat/metrics.hpp"
#include "procat/petri.hpp"
#include "procat/predictor.hpp"

namespace procat {

inline constexpr double kDefaultPStar = 0.7;
inline constexpr double kDefaultEta = 0.4;
inline constexpr double kDefaultEpsilon = 0.1;

// ---- synthetic data ---------------------------------------------------------

struct SyntheticSpec {
  std::string name = "synthetic";
  std::size_t interleaved_pairs = 2;
  std::size_t traces = 200;
  double noise = 0.1;       // share of traces with one random swap or deletion
  double label_flip = 0.1;  // share of outcome labels flipped
  // Outcome branches hold an alternation block; otherwise a plain sequence.
  bool interleaved_branches = true;
  std::uint64_t seed = 1;
};

struct SyntheticDataset {
  std::string name;
  EventLog log;
  std::map<std::string, std::string> outcomes;
  AuxTable aux;
  PetriNet model;
};

// Generating net: start, one alternation block per pair (a,b,a,b,... of
// length 6 or 8, either label first), then an outcome choice between two
// branches, then end.
PetriNet synthetic_net(std::size_t interleaved_pairs, bool interleaved_branches);
SyntheticDataset make_synthetic(const SyntheticSpec& spec);
// Six concurrent datasets (2-4 pairs) and one without concurrency.
std::vector<SyntheticSpec> default_suite(std::uint64_t seed, std::size_t traces = 200);
EventLog add_noise(const EventLog& log, double fraction, std::uint64_t seed);
void write_outcomes_csv(std::ostream& out, const std::map<std::string, std::string>& outcomes);
void write_aux_csv(std::ostream& out, const AuxTable& aux);

// ---- sweep ---------------------------------------------------------------

struct SweepGrid {
  std::vector<double> p_star{kDefaultPStar};
  std::vector<double> eta{kDefaultEta};
  std::vector<double> epsilon{kDefaultEpsilon};
};

// lo, lo+step, ..., hi (inclusive, rounded to 1e-9).
std::vector<double> grid_steps(double lo, double hi, double step);

struct SweepPoint {
  double p_star = 0.0;
  double eta = 0.0;
  double epsilon = 0.0;
  std::optional<ModelQuality> quality;
  std::string error;
};

struct SweepResult {
  std::vector<SweepPoint> points;  // p*, then eta, then epsilon ascending
  std::size_t best = 0;
};

// F-measure of discover(preprocess(log, p*)) on the pre-processed log.
SweepResult sweep(const EventLog& log, const SweepGrid& grid, const QualityOptions& quality = {});
void write_sweep_csv(std::ostream& out, const SweepResult& result);
nlohmann::json to_json(const SweepResult& result);

// ---- experiment ----------------------------------------------------------------

struct ExperimentDataset {
  std::string name;
  EventLog log;
  std::map<std::string, std::string> outcomes;
  AuxTable aux;
};

struct ExperimentConfig {
  double p_star = kDefaultPStar;
  DiscoveryConfig discovery;
  QualityOptions quality;
  MlpConfig model;
  double beta = 1.0;
  double train_share = 0.6;
  double validation_share = 0.2;
  std::uint64_t seed = 1;
  bool parallel = true;
  void validate() const;
};

MlpConfig default_experiment_model();

struct ArmResult {
  ModelQuality quality;
  std::size_t places = 0;
  std::optional<AucReport> auc;
  std::size_t test_cases = 0;
  std::string note;  // why auc is missing
};

struct ExperimentRow {
  std::string name;
  double p_star = 0.0;
  std::size_t merged_pairs = 0;
  std::optional<ArmResult> before;
  std::optional<ArmResult> after;
  std::string error;
};

struct WilcoxonCell {
  std::optional<WilcoxonResult> result;
  std::string note;
};

struct ExperimentReport {
  std::vector<ExperimentRow> rows;
  std::map<std::string, WilcoxonCell> wilcoxon;  // metric family -> test
  nlohmann::json config;
};

// Seeded case-level split; returns 0 train, 1 validation, 2 test per case.
std::map<std::string, int> split_cases(const EventLog& log, double train_share, double validation_share,
                                       std::uint64_t seed);
ArmResult run_arm(const EventLog& log, const ExperimentDataset& dataset, const ExperimentConfig& config);
ExperimentRow run_dataset(const ExperimentDataset& dataset, const ExperimentConfig& config);
ExperimentReport run_experiment(const std::vector<ExperimentDataset>& datasets, const ExperimentConfig& config);

enum class ReportFormat { Json, Csv, Markdown };
ReportFormat parse_report_format(const std::string& name);
std::string render_report(const ExperimentReport& report, ReportFormat format);
nlohmann::json to_json(const ExperimentReport& report);

// ---- files ---------------------------------------------------------------------

// {"datasets":[{"name","log","outcomes"?,"aux"?}], "model"?: {...}}; paths
// are relative to the manifest.
struct Manifest {
  std::vector<ExperimentDataset> datasets;
  std::optional<MlpConfig> model;
};
Manifest load_manifest(const std::string& path, const CsvConfig& csv = {});
// Writes <name>.csv, <name>_outcomes.csv, <name>_aux.csv and manifest.json.
void write_suite(const std::string& dir, const std::vector<SyntheticSpec>& specs);
std::vector<ExperimentDataset> synthetic_datasets(const std::vector<SyntheticSpec>& specs);

// ---- train / predict on stored samples -------------------------------------------

struct TrainedPredictor {
  MlpModel model;
  std::vector<std::string> classes;
  TargetMode mode = TargetMode::NextEvent;
};

// Outcome mode when `outcomes` is non-empty. Cases are split seeded into
// training and validation.
TrainedPredictor train_on_samples(const std::vector<TimedStateSample>& samples, const AuxTable& aux,
                                  const std::map<std::string, std::string>& outcomes, const MlpConfig& config,
                                  double validation_share = 0.2);

struct Prediction {
  std::string case_id;
  std::size_t event_index = 0;
  std::vector<double> proba;
};
std::vector<Prediction> predict_samples(const TrainedPredictor& predictor, const std::vector<TimedStateSample>& samples,
                                        const AuxTable& aux);
void write_predictions_csv(std::ostream& out, const TrainedPredictor& predictor, const std::vector<Prediction>& rows);
nlohmann::json to_json(const TrainedPredictor& predictor);
TrainedPredictor predictor_from_json(const nlohmann::json& j);

}  // namespace procat
