#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "blockflow/errors.hpp"
#include "blockflow/graph.hpp"
#include "blockflow/random_model.hpp"

using namespace blockflow;

namespace {

BlockGraph gain_chain() {
  BlockGraph g;
  g.name = "chain";
  g.blocks.push_back({"in0", BlockKind::Inport});
  Block gain{"g", BlockKind::Gain};
  gain.gain = 2.0;
  g.blocks.push_back(gain);
  g.blocks.push_back({"out0", BlockKind::Outport});
  g.edges.push_back({"in0", "g", 0});
  g.edges.push_back({"g", "out0", 0});
  return g;
}

bool has_violation(const ValidationReport& r, const std::string& rule) {
  return std::any_of(r.violations.begin(), r.violations.end(),
                     [&](const Violation& v) { return v.rule == rule; });
}

}  // namespace

TEST_CASE("validate accepts the minimal chain") {
  CHECK(validate_graph(gain_chain()).ok());
}

TEST_CASE("validate flags a Sum with one input") {
  BlockGraph g;
  g.blocks.push_back({"in0", BlockKind::Inport});
  g.blocks.push_back({"s", BlockKind::Sum});
  g.blocks.push_back({"out0", BlockKind::Outport});
  g.edges.push_back({"in0", "s", 0});
  g.edges.push_back({"s", "out0", 0});
  ValidationReport r = validate_graph(g);
  CHECK_FALSE(r.ok());
  CHECK(has_violation(r, "Sum requires >=2 inputs"));
}

TEST_CASE("validate flags an algebraic loop") {
  BlockGraph g;
  g.blocks.push_back({"in0", BlockKind::Inport});
  Block a{"ga", BlockKind::Sum};
  Block b{"gb", BlockKind::Gain};
  g.blocks.push_back(a);
  g.blocks.push_back(b);
  g.blocks.push_back({"out0", BlockKind::Outport});
  g.edges.push_back({"in0", "ga", 0});
  g.edges.push_back({"ga", "gb", 0});
  g.edges.push_back({"gb", "ga", 1});  // loop with no Delay
  g.edges.push_back({"gb", "out0", 0});
  ValidationReport r = validate_graph(g);
  CHECK(has_violation(r, "algebraic loop"));
}

TEST_CASE("validate flags self-loops on non-Delay blocks") {
  BlockGraph g;
  g.blocks.push_back({"in0", BlockKind::Inport});
  Block s{"s", BlockKind::Sum};
  g.blocks.push_back(s);
  g.blocks.push_back({"out0", BlockKind::Outport});
  g.edges.push_back({"in0", "s", 0});
  g.edges.push_back({"s", "s", 1});
  g.edges.push_back({"s", "out0", 0});
  CHECK(has_violation(validate_graph(g), "self-loop without Delay"));
}

TEST_CASE("delay self-loop is legal") {
  BlockGraph g;
  g.blocks.push_back({"in0", BlockKind::Inport});
  g.blocks.push_back({"d", BlockKind::Delay});
  Block s{"s", BlockKind::Sum};
  g.blocks.push_back(s);
  g.blocks.push_back({"out0", BlockKind::Outport});
  g.edges.push_back({"in0", "s", 0});
  g.edges.push_back({"d", "s", 1});
  g.edges.push_back({"s", "d", 0});  // cycle broken by the Delay source edge
  g.edges.push_back({"s", "out0", 0});
  CHECK(validate_graph(g).ok());
}

TEST_CASE("topological order of a chain") {
  BlockGraph g;
  g.blocks.push_back({"a", BlockKind::Inport});
  Block b{"b", BlockKind::Gain};
  g.blocks.push_back(b);
  g.blocks.push_back({"c", BlockKind::Outport});
  g.edges.push_back({"a", "b", 0});
  g.edges.push_back({"b", "c", 0});
  CHECK(topological_order(g) == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("topological order breaks ties lexicographically") {
  // diamond a -> {b, c} -> d with b < c
  BlockGraph g;
  g.blocks.push_back({"a", BlockKind::Inport});
  Block b{"b", BlockKind::Gain};
  Block c{"c", BlockKind::Gain};
  Block d{"d", BlockKind::Sum};
  g.blocks.push_back(b);
  g.blocks.push_back(c);
  g.blocks.push_back(d);
  g.blocks.push_back({"e", BlockKind::Outport});
  g.edges.push_back({"a", "b", 0});
  g.edges.push_back({"a", "c", 0});
  g.edges.push_back({"b", "d", 0});
  g.edges.push_back({"c", "d", 1});
  g.edges.push_back({"d", "e", 0});
  CHECK(topological_order(g) == std::vector<std::string>{"a", "b", "c", "d", "e"});
}

TEST_CASE("topological order throws on an algebraic loop") {
  BlockGraph g;
  Block a{"a", BlockKind::Gain};
  Block b{"b", BlockKind::Gain};
  g.blocks.push_back(a);
  g.blocks.push_back(b);
  g.edges.push_back({"a", "b", 0});
  g.edges.push_back({"b", "a", 0});
  CHECK_THROWS_AS(topological_order(g), Error);
}

TEST_CASE("topological order respects every non-delay edge on random DAGs") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RandomSpec spec;
    spec.n_blocks = 30;
    spec.n_inports = 2;
    spec.n_outports = 2;
    spec.edge_density = 0.3;
    spec.seed = seed;
    BlockGraph g = generate_random_model(spec);
    std::vector<std::string> order = topological_order(g);

    REQUIRE(order.size() == g.blocks.size());
    std::set<std::string> seen(order.begin(), order.end());
    CHECK(seen.size() == g.blocks.size());  // permutation

    std::map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < order.size(); ++i) pos[order[i]] = i;
    for (const Edge& e : g.edges) {
      if (g.block_at(e.src).kind == BlockKind::Delay) continue;
      CHECK(pos.at(e.src) < pos.at(e.dst));
    }
  }
}

TEST_CASE("sequential_execute evaluates a gain chain") {
  auto out = sequential_execute(gain_chain(), {{"in0", 3.0}}, 1);
  REQUIRE(out.at("out0").size() == 1);
  CHECK(out.at("out0")[0] == 6.0);
}

TEST_CASE("sequential_execute delay emits previous state") {
  BlockGraph g;
  g.blocks.push_back({"in0", BlockKind::Inport});
  g.blocks.push_back({"d", BlockKind::Delay});
  g.blocks.push_back({"out0", BlockKind::Outport});
  g.edges.push_back({"in0", "d", 0});
  g.edges.push_back({"d", "out0", 0});
  auto out = sequential_execute(g, {{"in0", 1.0}}, 2);
  CHECK(out.at("out0") == std::vector<double>{0.0, 1.0});
}

TEST_CASE("sequential_execute sums by port order") {
  BlockGraph g;
  g.blocks.push_back({"in0", BlockKind::Inport});
  Block c{"c", BlockKind::Const};
  c.const_value = 1.5;
  Block n{"n", BlockKind::Gain};
  n.gain = -1.0;
  Block s{"s", BlockKind::Sum};
  g.blocks.push_back(c);
  g.blocks.push_back(n);
  g.blocks.push_back(s);
  g.blocks.push_back({"out0", BlockKind::Outport});
  g.edges.push_back({"in0", "n", 0});
  g.edges.push_back({"c", "s", 0});
  g.edges.push_back({"n", "s", 1});
  g.edges.push_back({"s", "out0", 0});
  auto out = sequential_execute(g, {{"in0", 2.0}}, 1);
  CHECK(out.at("out0")[0] == -0.5);
}

TEST_CASE("sequential_execute reports missing inputs") {
  CHECK_THROWS_AS(sequential_execute(gain_chain(), {}, 1), Error);
}

TEST_CASE("sequential_execute is bit-exact deterministic") {
  RandomSpec spec;
  spec.n_blocks = 25;
  spec.n_inports = 3;
  spec.n_outports = 2;
  spec.edge_density = 0.4;
  spec.seed = 11;
  BlockGraph g = generate_random_model(spec);
  std::map<std::string, double> inputs;
  for (const Block& b : g.blocks)
    if (b.kind == BlockKind::Inport) inputs[b.id] = 0.125 * static_cast<double>(b.id.size());
  auto a = sequential_execute(g, inputs, 7);
  auto b = sequential_execute(g, inputs, 7);
  CHECK(a == b);
}

TEST_CASE("delay state chains through consecutive delays") {
  // in -> d1 -> d2 -> out must lag by two steps regardless of topo order
  BlockGraph g;
  g.blocks.push_back({"in0", BlockKind::Inport});
  g.blocks.push_back({"d1", BlockKind::Delay});
  g.blocks.push_back({"d2", BlockKind::Delay});
  g.blocks.push_back({"out0", BlockKind::Outport});
  g.edges.push_back({"in0", "d1", 0});
  g.edges.push_back({"d1", "d2", 0});
  g.edges.push_back({"d2", "out0", 0});
  SequentialExecutor exec(g);
  std::vector<double> seen;
  for (int step = 0; step < 4; ++step)
    seen.push_back(exec.step({{"in0", static_cast<double>(step + 1)}}).at("out0"));
  CHECK(seen == std::vector<double>{0.0, 0.0, 1.0, 2.0});
}
