#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "patchhopf/common.hpp"
#include "patchhopf/network.hpp"

namespace ph = patchhopf;

namespace {

template <typename Fn>
std::string thrown_code(Fn&& fn) {
  try {
    fn();
  } catch (const ph::Error& e) {
    return e.code();
  }
  return "";
}

bool has_rule(const ph::ValidationReport& rep, const std::string& rule) {
  for (const auto& [name, detail] : rep.violations)
    if (name == rule) return true;
  return false;
}

ph::PatchNetwork two_patch(double m1 = 1.0, double m2 = 1.0, double w = 1.0) {
  Eigen::VectorXd m(2);
  m << m1, m2;
  return ph::build_from_edges(2, m, {{1, 2, w}});
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  REQUIRE(out.good());
  out << body;
}

}  // namespace

TEST_CASE("two-patch construction produces the closed dispersal matrix") {
  const ph::PatchNetwork net = two_patch();
  Eigen::MatrixXd want(2, 2);
  want << -1, 1, 1, -1;
  CHECK(net.n() == 2);
  CHECK(net.D() == want);
  CHECK(net.delta() == 2.0);
}

TEST_CASE("the built-in 9-patch network matches its defining parameters") {
  const ph::PatchNetwork net = ph::paper_network_9();
  CHECK(net.n() == 9);
  CHECK(net.delta() == 128.0);
  CHECK(net.D()(1, 4) == 4.0);
  CHECK(net.D()(4, 1) == 4.0);
  CHECK(net.D()(4, 4) == -13.0);
  CHECK(net.D()(0, 1) == 3.0);
  CHECK(net.m()(2) == 16.0);
  CHECK(net.edges().size() == 12);
  CHECK(ph::validate(net).ok);
  CHECK(net.D().rowwise().sum().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("construction rejects malformed input") {
  Eigen::VectorXd m2(2), m3(3);
  m2 << 1, 1;
  m3 << 1, 1, 1;

  CHECK(thrown_code([&] {
          ph::build_from_edges(2, m2, {{1, 2, 1.0}, {1, 2, 2.0}});
        }) == "duplicate-edge");
  CHECK(thrown_code([&] { ph::build_from_edges(2, m2, {{2, 1, 1.0}}); }) ==
        "index-out-of-range");
  CHECK(thrown_code([&] { ph::build_from_edges(2, m2, {{0, 2, 1.0}}); }) ==
        "index-out-of-range");
  CHECK(thrown_code([&] { ph::build_from_edges(2, m2, {{1, 3, 1.0}}); }) ==
        "index-out-of-range");
  CHECK(thrown_code([&] { ph::build_from_edges(2, m2, {{1, 2, 0.0}}); }) ==
        "nonpositive-weight");
  CHECK(thrown_code([&] { ph::build_from_edges(2, m2, {{1, 2, -1.0}}); }) ==
        "nonpositive-weight");
  CHECK(thrown_code([&] { ph::build_from_edges(3, m3, {{1, 2, 1.0}}); }) ==
        "disconnected");
  CHECK(thrown_code([&] { ph::build_from_edges(1, m2.head(1), {}); }) ==
        "validation");
  CHECK(thrown_code([&] { ph::build_from_edges(3, m2, {{1, 2, 1.0}}); }) ==
        "dimension-mismatch");

  Eigen::VectorXd barren(2);
  barren << -1, -2;
  CHECK(thrown_code([&] { ph::build_from_edges(2, barren, {{1, 2, 1.0}}); }) ==
        "no-favorable-patch");
}

TEST_CASE("grid networks have 4-neighbor lattice structure") {
  Eigen::VectorXd m2(2);
  m2 << 1, 1;
  CHECK(ph::grid_network(1, 2, 1.0, m2).D() == two_patch().D());

  Eigen::VectorXd m4 = Eigen::VectorXd::Ones(4);
  const ph::PatchNetwork square = ph::grid_network(2, 2, 1.5, m4);
  for (int j = 0; j < 4; ++j) CHECK(square.D()(j, j) == -3.0);

  Eigen::VectorXd m100 = Eigen::VectorXd::Ones(100);
  const ph::PatchNetwork lattice = ph::grid_network(10, 10, 1.0, m100);
  CHECK(lattice.D()(0, 0) == -2.0);    // corner
  CHECK(lattice.D()(5, 5) == -3.0);    // top edge
  CHECK(lattice.D()(55, 55) == -4.0);  // interior
  CHECK(lattice.D()(0, 1) == 1.0);     // right neighbor
  CHECK(lattice.D()(0, 10) == 1.0);    // below neighbor
  CHECK(lattice.D()(0, 11) == 0.0);    // no diagonal coupling
  CHECK(ph::validate(lattice).ok);

  CHECK(thrown_code([&] { ph::grid_network(2, 2, 1.0, m2); }) ==
        "dimension-mismatch");
  CHECK(thrown_code([&] { ph::grid_network(2, 2, 0.0, m4); }) ==
        "nonpositive-weight");
}

TEST_CASE("serialization round-trips the defining fields exactly") {
  const std::string path = "test_network_roundtrip.json";
  const ph::PatchNetwork net = ph::paper_network_9();
  ph::save_network(net, path);
  const ph::PatchNetwork back = ph::load_network(path);
  std::remove(path.c_str());

  CHECK(back.n() == net.n());
  CHECK(back.m() == net.m());
  CHECK(back.D() == net.D());
  REQUIRE(back.edges().size() == net.edges().size());
  for (size_t i = 0; i < net.edges().size(); ++i)
    CHECK(back.edges()[i] == net.edges()[i]);
}

TEST_CASE("loading rejects malformed files") {
  const std::string path = "test_network_bad.json";

  write_file(path, "not json at all");
  CHECK(thrown_code([&] { ph::load_network(path); }) == "parse-error");

  write_file(path, R"({"n": 2, "m": [1, -2]})");
  CHECK(thrown_code([&] { ph::load_network(path); }) == "parse-error");

  write_file(path,
             R"({"n": 2, "m": [1, -2], "edges": [[1, 2, 1.0]], "x": 0})");
  CHECK(thrown_code([&] { ph::load_network(path); }) == "parse-error");

  write_file(path, R"({"n": 2, "m": [1, -2], "edges": [[1, 2]]})");
  CHECK(thrown_code([&] { ph::load_network(path); }) == "parse-error");

  write_file(path,
             R"({"n": 2, "m": [1, -2], "edges": [[1, 2, 1.0], [1, 2, 2.0]]})");
  CHECK(thrown_code([&] { ph::load_network(path); }) == "duplicate-edge");

  write_file(path, R"({"n": 0, "m": [], "edges": []})");
  CHECK(thrown_code([&] { ph::load_network(path); }) == "validation");

  std::remove(path.c_str());
  CHECK(thrown_code([&] { ph::load_network("does_not_exist.json"); }) == "io");
}

TEST_CASE("rule checks fire on raw matrices that never passed construction") {
  Eigen::VectorXd m(2);
  m << 1, -2;

  Eigen::MatrixXd asym(2, 2);
  asym << -1, 1, 2, -2;
  CHECK(has_rule(ph::validate(asym, m), "symmetry"));

  Eigen::MatrixXd negative(2, 2);
  negative << 1, -1, -1, 1;
  CHECK(has_rule(ph::validate(negative, m), "quasi-positive"));

  Eigen::MatrixXd drifting(2, 2);
  drifting << -2, 1, 1, -2;
  CHECK(has_rule(ph::validate(drifting, m), "row-sum"));

  Eigen::MatrixXd isolated = Eigen::MatrixXd::Zero(3, 3);
  isolated(0, 1) = isolated(1, 0) = 1.0;
  isolated(0, 0) = isolated(1, 1) = -1.0;
  Eigen::VectorXd m3(3);
  m3 << 1, 1, 1;
  CHECK(has_rule(ph::validate(isolated, m3), "irreducible"));

  Eigen::MatrixXd ok(2, 2);
  ok << -1, 1, 1, -1;
  Eigen::VectorXd barren(2);
  barren << -1, -2;
  CHECK(has_rule(ph::validate(ok, barren), "favorable-patch"));

  const ph::ValidationReport clean = ph::validate(ok, m);
  CHECK(clean.ok);
  CHECK(clean.violations.empty());
}

TEST_CASE("connectivity agrees with the boolean-power oracle") {
  std::mt19937 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> size(2, 6);

  int connected_seen = 0, disconnected_seen = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = size(rng);
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = j + 1; k < n; ++k)
        if (unit(rng) < 0.35) D(j, k) = D(k, j) = 0.5 + unit(rng);
    for (int j = 0; j < n; ++j) D(j, j) = -D.row(j).sum();

    const bool expected = oracles::connected_reference(D);
    const ph::ValidationReport rep =
        ph::validate(D, Eigen::VectorXd::Ones(n));
    CHECK(has_rule(rep, "irreducible") == !expected);
    (expected ? connected_seen : disconnected_seen)++;
  }
  // The trial distribution must exercise both outcomes.
  CHECK(connected_seen > 20);
  CHECK(disconnected_seen > 20);
}

TEST_CASE("random generated networks are always valid") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<int> size(2, 6);
    const ph::PatchNetwork net = oracles::random_network(rng, size(rng));
    CHECK(ph::validate(net).ok);
    CHECK(oracles::connected_reference(net.D()));
    CHECK(net.m().maxCoeff() > 0.0);
  }
}
