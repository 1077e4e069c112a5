#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "log_helpers.hpp"
#include "procat/concat.hpp"
#include "procat/error.hpp"
#include "procat/pipeline.hpp"

using namespace procat;

namespace {

ExperimentConfig quick_config() {
  ExperimentConfig c;
  c.model = default_experiment_model();
  c.model.epochs = 8;
  c.parallel = false;
  return c;
}

std::vector<SyntheticSpec> small_suite(std::uint64_t seed) { return default_suite(seed, 80); }

void check_same_arm(const ArmResult& a, const ArmResult& b) {
  CHECK(nlohmann::json(to_json(a.quality)) == nlohmann::json(to_json(b.quality)));
  CHECK(a.places == b.places);
  CHECK(a.test_cases == b.test_cases);
  CHECK(a.auc.has_value() == b.auc.has_value());
  if (a.auc && b.auc) CHECK(to_json(*a.auc) == to_json(*b.auc));
}

}  // namespace

TEST_CASE("defaults") {
  CHECK(kDefaultPStar == 0.7);
  CHECK(kDefaultEta == 0.4);
  CHECK(kDefaultEpsilon == 0.1);
  const ExperimentConfig c;
  CHECK(c.p_star == 0.7);
  CHECK(c.discovery.eta == 0.4);
  CHECK(c.discovery.epsilon == 0.1);
}

TEST_CASE("grid_steps") {
  const auto g = grid_steps(0.0, 1.0, 0.1);
  REQUIRE(g.size() == 11);
  CHECK(g[3] == 0.3);
  CHECK(g.back() == 1.0);
  CHECK(grid_steps(0.5, 0.5, 0.1) == std::vector<double>{0.5});
  CHECK_THROWS_AS(grid_steps(0.0, 1.0, 0.0), Error);
}

TEST_CASE("synthetic data") {
  SyntheticSpec spec;
  spec.traces = 50;
  const auto d = make_synthetic(spec);
  CHECK(d.log.size() == 50);
  CHECK(d.outcomes.size() == 50);
  CHECK(d.aux.columns == std::vector<std::string>{"aux_signal", "aux_noise"});
  CHECK(d.log.is_normalized());
  const auto again = make_synthetic(spec);
  CHECK(again.log == d.log);
  CHECK(again.outcomes == d.outcomes);

  const auto suite = default_suite(3);
  CHECK(suite.size() == 7);
  CHECK(suite.back().name == "no_concurrency");

  // noise touches about the requested share of traces
  const auto clean = generate_log(synthetic_net(2, true), 400, 9);
  const auto noisy = add_noise(clean, 0.1, 10);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < clean.size(); ++i) changed += !(clean.traces()[i] == noisy.traces()[i]);
  CHECK(changed > 20);
  CHECK(changed < 70);
  CHECK(add_noise(clean, 0.0, 10) == clean);
}

TEST_CASE("sweep examples") {
  const auto log = make_synthetic({"s", 2, 120, 0.1, 0.1, true, 4}).log;
  const auto single = sweep(log, SweepGrid{});
  REQUIRE(single.points.size() == 1);
  CHECK(single.points[0].p_star == 0.7);
  CHECK(single.points[0].eta == 0.4);
  CHECK(single.points[0].epsilon == 0.1);
  CHECK(single.best == 0);

  SweepGrid grid;
  grid.p_star = grid_steps(0.0, 1.0, 0.1);
  const auto result = sweep(log, grid);
  REQUIRE(result.points.size() == 11);
  double best = -1;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < grid.p_star.size(); ++i) {
    const auto pre = preprocess(log, grid.p_star[i]);
    const auto q = evaluate_model(discover(pre), pre);
    CHECK(result.points[i].quality->f_measure == q.f_measure);
    if (q.f_measure > best) {
      best = q.f_measure;
      arg = i;
    }
  }
  CHECK(result.best == arg);

  std::ostringstream csv;
  write_sweep_csv(csv, result);
  CHECK(csv.str().rfind("p_star,eta,epsilon,fitness,precision,f_measure,size,cfc,structuredness,best,error\n", 0) == 0);
  CHECK(to_json(result).at("points").size() == 11);
}

TEST_CASE("split_cases is case-level, seeded and proportional") {
  std::vector<std::vector<std::string>> traces(50, {"a", "b"});
  const auto log = make_log(traces);
  const auto s = split_cases(log, 0.6, 0.2, 5);
  CHECK(s.size() == 50);
  int counts[3] = {0, 0, 0};
  for (const auto& [id, part] : s) ++counts[part];
  CHECK(counts[0] == 30);
  CHECK(counts[1] == 10);
  CHECK(counts[2] == 10);
  CHECK(split_cases(log, 0.6, 0.2, 5) == s);
  CHECK(split_cases(log, 0.6, 0.2, 6) != s);
}

TEST_CASE("experiment: identical datasets give identical rows") {
  auto datasets = synthetic_datasets({small_suite(1)[0]});
  datasets.push_back(datasets.front());
  datasets.back().name = "copy";
  const auto report = run_experiment(datasets, quick_config());
  REQUIRE(report.rows.size() == 2);
  REQUIRE(report.rows[0].before);
  REQUIRE(report.rows[0].after);
  check_same_arm(*report.rows[0].before, *report.rows[1].before);
  check_same_arm(*report.rows[0].after, *report.rows[1].after);
  CHECK(report.rows[0].merged_pairs == report.rows[1].merged_pairs);
}

TEST_CASE("experiment: no concurrency means before equals after") {
  const auto suite = small_suite(2);
  const auto datasets = synthetic_datasets({suite.back()});
  CHECK(plan_concatenation(datasets[0].log, 0.7).ordered_pairs.empty());
  const auto row = run_dataset(datasets[0], quick_config());
  REQUIRE(row.before);
  REQUIRE(row.after);
  CHECK(row.merged_pairs == 0);
  check_same_arm(*row.before, *row.after);
}

TEST_CASE("experiment: six concurrent datasets populate the wilcoxon table") {
  auto suite = small_suite(3);
  suite.pop_back();
  const auto datasets = synthetic_datasets(suite);
  auto cfg = quick_config();
  cfg.parallel = true;
  const auto report = run_experiment(datasets, cfg);
  REQUIRE(report.rows.size() == 6);
  for (const char* fam : {"size", "cfc"}) {
    const auto& cell = report.wilcoxon.at(fam);
    REQUIRE(cell.result);
    std::vector<double> before, after;
    for (const auto& r : report.rows) {
      before.push_back(static_cast<double>(fam == std::string("size") ? r.before->quality.size : r.before->quality.cfc));
      after.push_back(static_cast<double>(fam == std::string("size") ? r.after->quality.size : r.after->quality.cfc));
    }
    const auto direct = wilcoxon_signed_rank(before, after);
    CHECK(cell.result->p_value == direct.p_value);
    CHECK(cell.result->statistic == direct.statistic);
  }
  // parallel and sequential runs agree
  cfg.parallel = false;
  CHECK(render_report(run_experiment(datasets, cfg), ReportFormat::Json) ==
        render_report(report, ReportFormat::Json));
}

TEST_CASE("experiment: raw arm is isolated from the pre-processed arm") {
  const auto datasets = synthetic_datasets({small_suite(4)[1]});
  const auto cfg = quick_config();
  const auto alone = run_arm(datasets[0].log, datasets[0], cfg);
  const auto row = run_dataset(datasets[0], cfg);
  REQUIRE(row.before);
  check_same_arm(alone, *row.before);
}

TEST_CASE("report rendering") {
  const auto datasets = synthetic_datasets({small_suite(5).back()});
  const auto report = run_experiment(datasets, quick_config());
  const auto md = render_report(report, ReportFormat::Markdown);
  CHECK(md.find("| dataset") != std::string::npos);
  const auto csv = render_report(report, ReportFormat::Csv);
  CHECK(csv.find("no_concurrency") != std::string::npos);
  const auto j = nlohmann::json::parse(render_report(report, ReportFormat::Json));
  CHECK(j.at("rows").size() == 1);
  CHECK(parse_report_format("md") == ReportFormat::Markdown);
  CHECK_THROWS_AS(parse_report_format("xml"), Error);
  CHECK_THROWS_AS([] {
    ExperimentConfig bad;
    bad.train_share = 0.9;
    bad.validation_share = 0.2;
    bad.validate();
  }(), Error);
}

TEST_CASE("suite files and manifest round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "procat_suite_test";
  std::filesystem::remove_all(dir);
  auto specs = small_suite(6);
  specs.resize(2);
  write_suite(dir.string(), specs);
  const auto m = load_manifest((dir / "manifest.json").string());
  const auto direct = synthetic_datasets(specs);
  REQUIRE(m.datasets.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(m.datasets[i].name == direct[i].name);
    CHECK(m.datasets[i].log == direct[i].log);
    CHECK(m.datasets[i].outcomes == direct[i].outcomes);
    CHECK(m.datasets[i].aux.columns == direct[i].aux.columns);
  }
  CHECK_THROWS_AS(load_manifest((dir / "missing.json").string()), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("train and predict on stored samples") {
  const auto d = make_synthetic({"t", 1, 120, 0.0, 0.0, true, 7});
  const auto net = discover(d.log);
  const auto samples = extract_tss(net, estimate_decay_rates(net, d.log).state, d.log);
  auto cfg = default_experiment_model();
  cfg.epochs = 5;

  const auto next = train_on_samples(samples, {}, {}, cfg);
  CHECK(next.mode == TargetMode::NextEvent);
  const auto rows = predict_samples(next, samples, {});
  CHECK(rows.size() == samples.size());
  for (const auto& r : rows) CHECK(r.proba.size() == next.classes.size());

  const auto outcome = train_on_samples(samples, d.aux, d.outcomes, cfg);
  CHECK(outcome.mode == TargetMode::Outcome);
  CHECK(outcome.classes == std::vector<std::string>{"0", "1"});
  const auto back = predictor_from_json(nlohmann::json::parse(to_json(outcome).dump()));
  const auto p1 = predict_samples(outcome, samples, d.aux);
  const auto p2 = predict_samples(back, samples, d.aux);
  REQUIRE(p1.size() == p2.size());
  for (std::size_t i = 0; i < p1.size(); ++i) CHECK(p1[i].proba == p2[i].proba);
  std::ostringstream out;
  write_predictions_csv(out, outcome, p1);
  CHECK(out.str().rfind("case,idx,p_0,p_1,predicted\n", 0) == 0);

  std::map<std::string, std::string> one_class;
  for (const auto& [c, l] : d.outcomes) one_class[c] = "1";
  try {
    train_on_samples(samples, {}, one_class, cfg);
    FAIL("expected DegenerateLabels");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateLabels);
  }
}
