#include <doctest.h>

#include <random>

#include "log_helpers.hpp"
#include "net_helpers.hpp"
#include "procat/discovery.hpp"
#include "procat/error.hpp"
#include "procat/metrics.hpp"
#include "procat/pipeline.hpp"
#include "procat/relations.hpp"

using namespace procat;

namespace {

using Words = std::set<std::vector<std::string>>;

bool is_workflow_net(const PetriNet& net) {
  std::size_t sources = 0, sinks = 0;
  for (PlaceId p = 0; p < net.place_count(); ++p) {
    sources += net.producers(p).empty();
    sinks += net.consumers(p).empty();
  }
  if (sources != 1 || sinks != 1) return false;
  for (const auto& t : net.transitions()) {
    if (t.inputs.empty() || t.outputs.empty()) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("detect_short_loops examples") {
  auto log = make_log({{"a", "b", "a"}});
  CHECK(detect_short_loops(build_dfg(log), log) == std::set<LabelPair>{{"a", "b"}});
  log = make_log({{"a", "b"}, {"b", "a"}});
  CHECK(detect_short_loops(build_dfg(log), log).empty());
  CHECK(detect_short_loops(build_dfg(EventLog{}), EventLog{}).empty());
  // a,a,a is a self-loop, not a short loop
  log = make_log({{"a", "a", "a"}});
  CHECK(detect_short_loops(build_dfg(log), log).empty());
}

TEST_CASE("detect_concurrency balance test") {
  auto traces = repeat({"a", "b"}, 5);
  const auto back = repeat({"b", "a"}, 5);
  traces.insert(traces.end(), back.begin(), back.end());
  const auto balanced = make_log(traces);
  const auto g = build_dfg(balanced);
  REQUIRE(g.follow_count("a", "b") == 5);
  REQUIRE(g.follow_count("b", "a") == 5);
  CHECK(detect_concurrency(g, {}, 0.4) == std::set<LabelPair>{{"a", "b"}});
  CHECK(detect_concurrency(g, {}, 0.0).empty());
  CHECK(detect_concurrency(g, {{"a", "b"}}, 0.4).empty());

  auto skew = repeat({"a", "b"}, 9);
  skew.push_back({"b", "a"});
  const auto g2 = build_dfg(make_log(skew));
  CHECK(detect_concurrency(g2, {}, 0.4).empty());  // |9-1|/10 = 0.8
  CHECK(detect_concurrency(g2, {}, 0.81) == std::set<LabelPair>{{"a", "b"}});
}

TEST_CASE("filter_dfg drops rare edges unless they disconnect") {
  auto traces = repeat({"a", "b", "e"}, 18);
  traces.push_back({"a", "c", "e"});
  traces.push_back({"a", "x", "e"});
  const auto more = repeat({"c", "e"}, 5);
  traces.insert(traces.end(), more.begin(), more.end());
  const auto g = build_dfg(make_log(traces));
  const auto f = filter_dfg(g, 0.1);
  CHECK(f.follow_count("a", "c") == 0);  // 1 < 0.1 * 18, c still reachable from start
  CHECK(f.follow_count("a", "x") == 1);  // x has no other way in
  CHECK(f.follow_count("a", "b") == 18);
  CHECK(is_connected(f));

  CHECK(filter_dfg(g, 0.0) == g);
  const auto chain = build_dfg(make_log({{"a", "b", "c"}}));
  CHECK(filter_dfg(chain, 1.0) == chain);
}

TEST_CASE("gateway graph examples") {
  auto log = make_log({{"a", "b", "c", "d"}, {"a", "c", "b", "d"}});
  auto dfg = build_dfg(log);
  auto conc = detect_concurrency(dfg, detect_short_loops(dfg, log), 0.4);
  REQUIRE(conc == std::set<LabelPair>{{"b", "c"}});
  auto g = build_gateway_graph(dfg, conc);
  CHECK(g.count(NodeKind::AndSplit) == 1);
  CHECK(g.count(NodeKind::AndJoin) == 1);
  CHECK(g.count(NodeKind::XorSplit) == 0);

  log = make_log({{"a", "b", "d"}, {"a", "c", "d"}});
  dfg = build_dfg(log);
  g = build_gateway_graph(dfg, {});
  CHECK(g.count(NodeKind::XorSplit) == 1);
  CHECK(g.count(NodeKind::XorJoin) == 1);
  CHECK(g.count(NodeKind::AndSplit) == 0);

  log = make_log({{"a", "b", "c"}});
  g = build_gateway_graph(build_dfg(log), {});
  CHECK(g.nodes().size() == 5);  // start, a, b, c, end
  CHECK(g.edges().size() == 4);
}

TEST_CASE("mixed successors nest an XOR inside an AND") {
  // after s: f runs alongside a choice between c and d
  const auto log = make_log({{"s", "f", "c", "e"}, {"s", "c", "f", "e"}, {"s", "f", "d", "e"}, {"s", "d", "f", "e"}});
  const auto dfg = build_dfg(log);
  const auto conc = detect_concurrency(dfg, detect_short_loops(dfg, log), 0.4);
  REQUIRE(conc == std::set<LabelPair>{{"c", "f"}, {"d", "f"}});
  const auto g = build_gateway_graph(dfg, conc);
  CHECK(g.count(NodeKind::AndSplit) == 1);
  CHECK(g.count(NodeKind::XorSplit) == 1);
  const auto net = to_petri_net(g);
  CHECK(check_soundness(net).ok());
  CHECK(language(net, 6) == Words{{"s", "f", "c", "e"}, {"s", "c", "f", "e"}, {"s", "f", "d", "e"}, {"s", "d", "f", "e"}});
}

TEST_CASE("gateway graph validation") {
  GatewayGraph g;
  const auto s = g.add_node(NodeKind::Start);
  const auto a = g.add_node(NodeKind::Activity, "a");
  const auto e = g.add_node(NodeKind::End);
  const auto orphan = g.add_node(NodeKind::Activity, "b");
  g.add_edge(s, a);
  g.add_edge(a, e);
  g.add_edge(s, orphan);
  try {
    g.validate();
    FAIL("expected Disconnected");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::Disconnected);
  }
}

TEST_CASE("to_petri_net examples") {
  auto net = discover(make_log({{"a", "b"}}));
  CHECK(net.place_count() == 3);
  CHECK(net.transition_count() == 2);
  CHECK(net.find_place("src"));
  CHECK(net.find_place("sink"));
  CHECK(language(net, 4) == Words{{"a", "b"}});

  net = discover(make_log({{"a", "b", "c", "d"}, {"a", "c", "b", "d"}}));
  CHECK(language(net, 6) == Words{{"a", "b", "c", "d"}, {"a", "c", "b", "d"}});
  // the AND split is a silent transition with two outputs
  bool found = false;
  for (const auto& t : net.transitions()) found = found || (t.silent() && t.outputs.size() == 2);
  CHECK(found);

  net = discover(make_log({{"a", "b", "d"}, {"a", "c", "d"}}));
  CHECK(language(net, 5) == Words{{"a", "b", "d"}, {"a", "c", "d"}});
  std::size_t shared = 0;
  for (PlaceId p = 0; p < net.place_count(); ++p) shared += net.consumers(p).size() == 2;
  CHECK(shared == 1);
}

TEST_CASE("discover examples") {
  const auto seq = discover(generate_log(sequence_net({"a", "b", "c"}), 5, 1));
  CHECK(seq.place_count() == 4);
  CHECK(seq.transition_count() == 3);
  CHECK(language(seq, 5) == Words{{"a", "b", "c"}});

  std::vector<std::vector<std::string>> traces;
  for (int i = 0; i < 10; ++i) {
    traces.push_back({"a", "b", "c"});
    traces.push_back({"b", "a", "c"});
  }
  const auto log = make_log(traces);
  DiscoveryTrace info;
  const auto net = discover(log, {0.4, 0.1}, &info);
  CHECK(info.concurrency == std::set<LabelPair>{{"a", "b"}});
  CHECK(fitness(net, log).value == 1.0);
  CHECK(language(net, 4) == Words{{"a", "b", "c"}, {"b", "a", "c"}});

  const auto single = discover(make_log({{"x", "y", "z", "w"}}));
  CHECK(language(single, 6) == Words{{"x", "y", "z", "w"}});
  CHECK(single.transition_count() == 4);

  CHECK_THROWS_AS(discover(EventLog{}), Error);
  CHECK_THROWS_AS(DiscoveryConfig({1.5, 0.1}).validate(), Error);
}

// every interleaving once, so concurrent pairs are balanced
TEST_CASE("property: discovery round-trips loop-free block nets") {
  std::mt19937_64 rng(41);
  int checked = 0;
  for (int i = 0; i < 120; ++i) {
    const auto model = testkit::unique_labels(testkit::random_block_net(rng, 8, false));
    const auto words = language(model, 12);
    const auto log = make_log({words.begin(), words.end()});
    DiscoveryTrace info;
    const auto net = discover(log, {}, &info);
    if (info.concurrency.size() > 2) continue;
    INFO("model " << i << "\n" << to_dot(model) << "\n" << to_dot(net));
    CHECK(is_workflow_net(net));
    CHECK(fitness(net, log).value == 1.0);
    CHECK(to_json(discover(log)) == to_json(net));
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("property: discovered nets on desk-scale logs are sound") {
  std::mt19937_64 rng(43);
  int checked = 0;
  for (int i = 0; i < 80; ++i) {
    const auto model = testkit::unique_labels(testkit::random_block_net(rng, 8, false));
    const auto words = language(model, 12);
    const auto net = discover(make_log({words.begin(), words.end()}));
    if (net.transition_count() > 12) continue;
    INFO("model " << i << "\n" << to_dot(model) << "\n" << to_dot(net));
    const auto s = check_soundness(net);
    CHECK(s.option_to_complete);
    CHECK(s.proper_completion);
    CHECK(s.no_dead_transitions);
    ++checked;
  }
  CHECK(checked > 30);
}

TEST_CASE("discovery metadata records the formulas") {
  const auto j = discovery_metadata({0.4, 0.1});
  CHECK(j.at("eta") == 0.4);
  CHECK(j.at("epsilon") == 0.1);
}
