#include <doctest.h>

#include <random>

#include "log_helpers.hpp"
#include "procat/concat.hpp"
#include "procat/error.hpp"
#include "procat/pipeline.hpp"
#include "testkit.hpp"

using namespace procat;

namespace {

EventLog ab_log() {
  auto traces = repeat({"a", "b", "c"}, 5);
  const auto other = repeat({"b", "a", "c"}, 5);
  traces.insert(traces.end(), other.begin(), other.end());
  return make_log(traces);
}

std::set<std::pair<std::string, std::string>> valid_pairs(const ConcatPlan& plan) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& p : plan.ordered_pairs) out.emplace(p.pair.first, p.pair.second);
  return out;
}

}  // namespace

TEST_CASE("plan_concatenation examples") {
  const auto plan = plan_concatenation(ab_log(), 0.3);
  REQUIRE(plan.ordered_pairs.size() == 1);
  CHECK(plan.ordered_pairs[0].pair.first == "a");
  CHECK(plan.ordered_pairs[0].pair.second == "b");
  CHECK(plan.ordered_pairs[0].forward == doctest::Approx(0.5));
  CHECK(plan.ordered_pairs[0].backward == doctest::Approx(0.5));
  CHECK(plan.ordered_pairs[0].pair.score == doctest::Approx(1.0));
  CHECK(plan.rename_map.at("a") == "a+b");

  CHECK(plan_concatenation(ab_log(), 0.7).ordered_pairs.empty());
  CHECK(plan_concatenation(ab_log(), 1.0).ordered_pairs.empty());
  CHECK(plan_concatenation(make_log({{"a", "b"}, {"b", "a"}}), 1.0).ordered_pairs.empty());
  CHECK_THROWS_AS(plan_concatenation(ab_log(), 1.5), Error);
}

TEST_CASE("equal scores are ordered lexicographically and labels merge once") {
  const auto disjoint = plan_concatenation(make_log({{"c", "d"}, {"d", "c"}, {"a", "b"}, {"b", "a"}}), 0.5);
  REQUIRE(disjoint.ordered_pairs.size() == 2);
  CHECK(disjoint.ordered_pairs[0].pair.first == "a");
  CHECK(disjoint.ordered_pairs[1].pair.first == "c");
  CHECK(disjoint.ordered_pairs[0].merged);
  CHECK(disjoint.ordered_pairs[1].merged);

  // P(a->b) = P(a->c) = 1/2, P(b->a) = P(c->a) = 1: both score 1.5.
  const auto shared = plan_concatenation(make_log({{"a", "b"}, {"b", "a"}, {"a", "c"}, {"c", "a"}}), 0.4);
  REQUIRE(shared.ordered_pairs.size() == 2);
  CHECK(shared.ordered_pairs[0].pair.second == "b");
  CHECK(shared.ordered_pairs[0].merged);
  CHECK_FALSE(shared.ordered_pairs[1].merged);
  CHECK(shared.rename_map.count("c") == 0);
}

TEST_CASE("apply_concatenation examples") {
  const auto log = make_log({{"a", "b", "c"}, {"b", "a", "c"}});
  const auto plan = plan_concatenation(log, 0.3);
  REQUIRE(plan.rename_map.size() == 2);
  const auto out = apply_concatenation(log, plan);
  CHECK(sequences(out) == std::vector<std::vector<std::string>>{{"a+b", "c"}, {"a+b", "c"}});
  // composite carries the earlier stamp
  CHECK(out.traces()[0].events[0].timestamp == 10);
  CHECK(out.traces()[0].events[1].timestamp == 30);

  const auto plain = make_log({{"a", "b", "c"}, {"c", "b"}});
  CHECK(apply_concatenation(plain, ConcatPlan{}) == plain);

  CHECK(sequences(apply_concatenation(make_log({{"a", "a", "b"}}), ConcatPlan{})) ==
        std::vector<std::vector<std::string>>{{"a", "b"}});
}

TEST_CASE("lone occurrences are renamed and repeats collapse to the first") {
  // b,a merge; the trailing lone a is renamed then collapsed into a+b
  auto traces = repeat({"a", "b", "a", "b", "a", "b"}, 3);
  traces.push_back({"b", "a", "c", "a"});
  const auto log = make_log(traces);
  const auto plan = plan_concatenation(log, 0.5);
  REQUIRE(plan.rename_map.size() == 2);
  const auto out = apply_concatenation(log, plan);
  CHECK(sequences(out).back() == std::vector<std::string>{"a+b", "c", "a+b"});
  CHECK(sequences(out).front() == std::vector<std::string>{"a+b"});
  CHECK(out.traces().front().events[0].timestamp == 10);
}

TEST_CASE("apply errors") {
  ConcatPlan bogus;
  bogus.rename_map["zz"] = "a+zz";
  try {
    apply_concatenation(make_log({{"a"}}), bogus);
    FAIL("expected PlanLogMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::PlanLogMismatch);
  }
  try {
    plan_concatenation(make_log({{"a", "b"}, {"b", "a"}, {"a+b"}}), 0.3);
    FAIL("expected LabelCollision");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::LabelCollision);
  }
}

TEST_CASE("preprocess composes and is idempotent on the examples") {
  const auto log = make_log({{"a", "b", "c"}, {"b", "a", "c"}});
  const auto once = preprocess(log, 0.3);
  CHECK(sequences(once) == std::vector<std::vector<std::string>>{{"a+b", "c"}, {"a+b", "c"}});
  CHECK(preprocess(once, 0.3) == once);
  const auto loop_free = make_log({{"a", "b", "c"}, {"a", "c"}});
  CHECK(preprocess(loop_free, 1.0) == loop_free);
  for (std::uint64_t s = 1; s <= 5; ++s) {
    SyntheticSpec spec;
    spec.seed = s;
    spec.noise = 0.0;
    const auto d = make_synthetic(spec);
    const auto p = preprocess(d.log, 0.7);
    CHECK(preprocess(p, 0.7) == p);
  }
}

TEST_CASE("property: concatenation invariants on random logs") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 400; ++i) {
    const auto log = testkit::random_log(rng, 4, 12, 8);
    const double p1 = u(rng), p2 = u(rng);
    const double lo = std::min(p1, p2), hi = std::max(p1, p2);
    const auto plan = plan_concatenation(log, lo);

    for (std::size_t k = 0; k < plan.ordered_pairs.size(); ++k) {
      const auto& p = plan.ordered_pairs[k];
      CHECK(p.forward > lo);
      CHECK(p.backward > lo);
      if (k > 0) CHECK(plan.ordered_pairs[k - 1].pair.score >= p.pair.score);
    }
    // each label in at most one merged pair
    std::map<std::string, int> uses;
    for (const auto& p : plan.ordered_pairs) {
      if (!p.merged) continue;
      ++uses[p.pair.first];
      ++uses[p.pair.second];
    }
    for (const auto& [l, n] : uses) CHECK(n == 1);

    // threshold monotonicity
    const auto at_lo = valid_pairs(plan), at_hi = valid_pairs(plan_concatenation(log, hi));
    for (const auto& p : at_hi) CHECK(at_lo.count(p) == 1);

    const auto out = apply_concatenation(log, plan);
    CHECK(out.event_count() <= log.event_count());
    CHECK(out.label_universe().size() <= log.label_universe().size());
    CHECK(out.is_normalized());
    std::set<std::string> allowed = log.label_universe();
    for (const auto& p : plan.ordered_pairs) allowed.insert(p.composite);
    for (const auto& l : out.label_universe()) CHECK(allowed.count(l) == 1);
    for (const auto& [orig, comp] : plan.rename_map) CHECK(out.label_universe().count(orig) == 0);
    for (const auto& t : out.traces()) {
      for (std::size_t k = 1; k < t.events.size(); ++k) CHECK(t.events[k - 1].label != t.events[k].label);
    }
  }
}

TEST_CASE("composite naming is ordered and injective") {
  CHECK(composite_label("b", "a") == "a+b");
  CHECK(composite_label("a", "b") == "a+b");
  std::set<std::string> names;
  const std::vector<std::string> labels{"a", "b", "c", "d"};
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = i + 1; j < labels.size(); ++j) names.insert(composite_label(labels[i], labels[j]));
  }
  CHECK(names.size() == 6);
}

TEST_CASE("plan json records pairs and renames") {
  const auto j = to_json(plan_concatenation(ab_log(), 0.3));
  CHECK(j.at("pairs").size() == 1);
  CHECK(j.at("rename_map").at("b") == "a+b");
  CHECK(j.at("tie_break") == "lexicographic");
}
