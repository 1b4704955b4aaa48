// SPDX-License-Identifier: Apache-2.0

#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "mechnet/error.hpp"
#include "mechnet/graph.hpp"
#include "oracles.hpp"

using namespace mechnet;

TEST_CASE("add_node numbers nodes consecutively") {
  Graph g;
  CHECK(g.add_node() == 0);
  CHECK(g.node_count() == 1);
  Graph h(4);
  CHECK(h.add_node() == 4);
  CHECK(h.add_node() == 5);
  CHECK(h.degree(5) == 0);
}

TEST_CASE("add_edge keeps the graph simple") {
  Graph g(3);
  CHECK(g.add_edge(0, 1));
  CHECK(g.degree(0) == 1);
  CHECK(g.degree(1) == 1);
  CHECK_FALSE(g.add_edge(0, 1));
  CHECK_FALSE(g.add_edge(1, 0));
  CHECK(g.edge_count() == 1);
  CHECK_FALSE(g.add_edge(2, 2));
  CHECK_THROWS_AS(g.add_edge(0, 7), std::out_of_range);
  CHECK(g.is_consistent());
}

TEST_CASE("remove_edge") {
  Graph g(3);
  g.add_edge(0, 1);
  g.add_edge(1, 2);
  CHECK(g.remove_edge(1, 0));
  CHECK(g.edge_count() == 1);
  CHECK_FALSE(g.has_edge(0, 1));
  CHECK_FALSE(g.remove_edge(0, 1));
  CHECK_FALSE(g.remove_edge(0, 2));
  CHECK(g.edge_count() == 1);
  CHECK(g.is_consistent());
}

TEST_CASE("random operation sequences preserve the simple-graph invariant") {
  Rng rng(11);
  Graph g(30);
  std::uniform_int_distribution<NodeId> node(0, 29);
  std::bernoulli_distribution add(0.6);
  for (int step = 0; step < 5000; ++step) {
    const NodeId u = node(rng), v = node(rng);
    if (add(rng)) {
      g.add_edge(u, v);
    } else {
      g.remove_edge(u, v);
    }
    if (step % 500 == 0) REQUIRE(g.is_consistent());
  }
  CHECK(g.is_consistent());
  std::size_t degree_sum = 0;
  for (NodeId v = 0; v < 30; ++v) degree_sum += g.degree(v);
  CHECK(degree_sum == 2 * g.edge_count());
}

TEST_CASE("sample_uniform_edge") {
  Rng rng(3);
  Graph single(2);
  single.add_edge(0, 1);
  for (int i = 0; i < 10; ++i) CHECK(*sample_uniform_edge(single, rng) == Edge{0, 1});

  CHECK_FALSE(sample_uniform_edge(oracle::complete_graph(3), rng, edge_outside_triangles).has_value());
  CHECK_FALSE(sample_uniform_edge(Graph(5), rng).has_value());

  SUBCASE("only edges outside triangles, uniformly") {
    Graph g(6);
    g.add_edge(0, 1);
    g.add_edge(1, 2);
    g.add_edge(3, 4);
    g.add_edge(4, 5);
    g.add_edge(3, 5);
    std::vector<double> counts(2, 0.0);
    for (int i = 0; i < 10000; ++i) {
      const auto e = sample_uniform_edge(g, rng, edge_outside_triangles);
      REQUIRE(e.has_value());
      REQUIRE(((*e == Edge{0, 1}) || (*e == Edge{1, 2})));
      counts[e->u == 0 ? 0 : 1] += 1.0;
    }
    CHECK(oracle::chi2_pvalue(counts, {0.5, 0.5}) > 0.01);
  }

  SUBCASE("trivial predicate is uniform over all edges") {
    Graph g = oracle::random_graph(12, 0.3, rng);
    const auto edges = g.sorted_edges();
    std::vector<double> counts(edges.size(), 0.0);
    for (int i = 0; i < 10000; ++i) {
      const Edge e = *sample_uniform_edge(g, rng);
      counts[std::lower_bound(edges.begin(), edges.end(), e,
                              [](Edge a, Edge b) { return a.u != b.u ? a.u < b.u : a.v < b.v; }) -
             edges.begin()] += 1.0;
    }
    CHECK(oracle::chi2_pvalue(counts, std::vector<double>(edges.size(), 1.0 / edges.size())) > 0.01);
  }

  SUBCASE("rare qualifying edge is still found") {
    Graph g = oracle::complete_graph(12);
    const NodeId extra = g.add_node();
    g.add_edge(0, extra);
    for (int i = 0; i < 20; ++i) CHECK(*sample_uniform_edge(g, rng, edge_outside_triangles) == Edge{0, extra});
  }
}

TEST_CASE("parse_edge_list") {
  SUBCASE("labels map in first-appearance order") {
    std::istringstream in("a b\nb c\n");
    const auto lg = parse_edge_list(in);
    CHECK(lg.graph.node_count() == 3);
    CHECK(lg.graph.edge_count() == 2);
    CHECK(lg.labels == std::vector<std::string>{"a", "b", "c"});
  }
  SUBCASE("duplicates and loops are dropped") {
    std::istringstream in("a b\nb a\na a\n");
    const auto lg = parse_edge_list(in);
    CHECK(lg.graph.node_count() == 2);
    CHECK(lg.graph.edge_count() == 1);
  }
  SUBCASE("empty input") {
    std::istringstream in("");
    CHECK(parse_edge_list(in).graph.node_count() == 0);
  }
  SUBCASE("commas, comments and blank lines") {
    std::istringstream in("# header\n\nx,y\n  y , z  \n# trailing\n");
    const auto lg = parse_edge_list(in);
    CHECK(lg.graph.edge_count() == 2);
  }
  SUBCASE("malformed lines report their line number") {
    std::istringstream in("a b\nb\n");
    try {
      parse_edge_list(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
    std::istringstream three("a b c\n");
    CHECK_THROWS_AS(parse_edge_list(three), ParseError);
  }
  CHECK_THROWS_AS(load_edge_list("/nonexistent/file.edges"), IoError);
}

TEST_CASE("edge list round trip keeps identifiers and isolated nodes") {
  Rng rng(5);
  Graph g = oracle::random_graph(25, 0.1, rng);
  g.add_node();
  std::stringstream buf;
  write_edge_list(buf, g);
  const auto back = parse_edge_list(buf);
  CHECK(back.graph.node_count() == g.node_count());
  CHECK(back.graph.sorted_edges() == g.sorted_edges());
}

TEST_CASE("flatten_contacts") {
  SUBCASE("threshold reached") {
    const std::vector<ContactRecord> r{{"a", "b", 6}};
    CHECK(flatten_contacts(r, 6).graph.edge_count() == 1);
  }
  SUBCASE("below threshold keeps nodes") {
    const std::vector<ContactRecord> r{{"a", "b", 5}};
    const auto lg = flatten_contacts(r, 6);
    CHECK(lg.graph.edge_count() == 0);
    CHECK(lg.graph.node_count() == 2);
  }
  SUBCASE("counts sum over the unordered pair") {
    const std::vector<ContactRecord> r{{"a", "b", 3}, {"b", "a", 3}};
    CHECK(flatten_contacts(r, 6).graph.edge_count() == 1);
  }
  SUBCASE("repeated lines default to one contact each") {
    std::istringstream in("a b\na b\nb a\nc d 2\n");
    const auto records = parse_contacts(in);
    CHECK(records.size() == 4);
    const auto lg = flatten_contacts(records, 3);
    CHECK(lg.graph.edge_count() == 1);
    CHECK(lg.graph.node_count() == 4);
  }
  const std::vector<ContactRecord> r{{"a", "b", 1}};
  CHECK_THROWS_AS(flatten_contacts(r, 0), ContractError);
}

TEST_CASE("relabeled applies the permutation") {
  Graph g = oracle::path_graph(3);
  const std::vector<NodeId> perm{2, 0, 1};
  const Graph h = g.relabeled(perm);
  CHECK(h.has_edge(2, 0));
  CHECK(h.has_edge(0, 1));
  CHECK_FALSE(h.has_edge(2, 1));
}
