#include <doctest.h>

#include <random>

#include "log_helpers.hpp"
#include "procat/error.hpp"
#include "procat/metrics.hpp"
#include "testkit.hpp"

using namespace procat;
using namespace procat::testkit;

namespace {

// src -s-> {p1, p2} -b,c-> {q1, q2} -j-> sink
PetriNet and_block() {
  PetriNet net;
  for (const char* p : {"src", "p1", "p2", "q1", "q2", "sink"}) net.add_place(p);
  const auto s = net.add_transition("s", std::nullopt);
  const auto b = net.add_transition("b", "b");
  const auto c = net.add_transition("c", "c");
  const auto j = net.add_transition("j", std::nullopt);
  net.add_input_arc(0, s);
  net.add_output_arc(s, 1);
  net.add_output_arc(s, 2);
  net.add_input_arc(1, b);
  net.add_output_arc(b, 3);
  net.add_input_arc(2, c);
  net.add_output_arc(c, 4);
  net.add_input_arc(3, j);
  net.add_input_arc(4, j);
  net.add_output_arc(j, 5);
  Marking m0(6), mf(6);
  m0[0] = 1;
  mf[5] = 1;
  net.set_initial_marking(m0);
  net.set_final_marking(mf);
  return net;
}

}  // namespace

TEST_CASE("brute_alignment examples") {
  const auto abc = sequence_net({"a", "b", "c"});
  CHECK(brute_alignment(abc, {"a", "b", "c"}) == 0);
  CHECK(brute_alignment(abc, {"a", "c"}) == 1);
  CHECK(brute_alignment(abc, {"x", "y"}) == 2 + 3);
  CHECK(brute_alignment(and_block(), {"c", "b"}) == 0);
  CHECK(brute_alignment(and_block(), {"b", "b"}) == 2);
  OracleBudget tiny;
  tiny.max_trace_len = 2;
  try {
    brute_alignment(abc, {"a", "b", "c"}, tiny);
    FAIL("expected BudgetExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BudgetExceeded);
  }
}

TEST_CASE("brute_reachability examples") {
  CHECK(brute_reachability(sequence_net({"a", "b", "c"})).size() == 4);
  // sequential 2-step equivalent would have 4 markings; the AND block adds 2
  CHECK(brute_reachability(and_block()).size() == 6);

  PetriNet unbounded;
  const auto p = unbounded.add_place("src");
  const auto q = unbounded.add_place("sink");
  const auto t = unbounded.add_transition("grow", "g");
  unbounded.add_input_arc(p, t);
  unbounded.add_output_arc(t, p);
  unbounded.add_output_arc(t, q);
  unbounded.set_initial_marking(Marking(std::vector<int>{1, 0}));
  unbounded.set_final_marking(Marking(std::vector<int>{0, 1}));
  try {
    brute_reachability(unbounded);
    FAIL("expected BudgetExceeded");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::BudgetExceeded);
  }
}

TEST_CASE("exact_wilcoxon examples") {
  CHECK(exact_wilcoxon({1, 2, 3, 4, 5, 6}) == doctest::Approx(0.03125));
  CHECK(exact_wilcoxon({1, -1, 2, -2, 3, -3}) == doctest::Approx(1.0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.3, 1.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> d(5 + rng() % 8);
    for (auto& v : d) v = g(rng);
    CHECK(exact_wilcoxon(d) == doctest::Approx(wilcoxon_exact_p(d)).epsilon(1e-12));
  }
}

TEST_CASE("scans and auc oracles") {
  const auto log = make_log({{"a", "b", "b"}, {"b", "a"}, {"a", "c"}});
  CHECK(scan_concurrent_pairs(log) == std::set<std::pair<std::string, std::string>>{{"a", "b"}});
  CHECK(scan_self_loops(log) == std::set<std::string>{"b"});
  CHECK(scan_follow_probability(log, "a", "b") == doctest::Approx(0.5));
  CHECK(pairwise_auc({0.9, 0.4, 0.6, 0.1}, {1, 1, 0, 0}) == 0.75);
  const auto [lo, hi] = bootstrap_auc_ci({0.9, 0.8, 0.2, 0.1}, {1, 1, 0, 0}, 200, 1);
  CHECK(lo == 1.0);
  CHECK(hi == 1.0);
}

TEST_CASE("generators") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i) {
    const auto log = random_log(rng, 4, 6, 7);
    CHECK(log.label_universe().size() <= 4);
    CHECK(log.is_normalized());
    const auto net = random_block_net(rng, 9);
    CHECK(net.transition_count() <= 9);
    net.validate();
    const auto flat = random_block_net(rng, 9, false);
    for (const auto& t : flat.transitions()) {
      if (t.silent()) CHECK((t.inputs.size() > 1 || t.outputs.size() > 1));
    }
    const auto u = unique_labels(net);
    CHECK(u.transition_count() == net.transition_count());
    const auto alpha = u.alphabet();
    std::size_t visible = 0;
    for (const auto& t : u.transitions()) visible += !t.silent();
    CHECK(alpha.size() == visible);
    CHECK(random_trace(rng, net, 10).size() <= 12);
  }
}

TEST_CASE("self_check passes") {
  const auto rows = self_check(1);
  CHECK(rows.size() >= 6);
  for (const auto& r : rows) {
    INFO(r.name << ": " << r.detail);
    CHECK(r.passed);
  }
}
