#include "patchhopf/network.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <set>

#include "patchhopf/common.hpp"

namespace patchhopf {

namespace {

// Connectivity of the graph induced by positive off-diagonal entries.
bool connected(const Eigen::MatrixXd& D) {
  const int n = static_cast<int>(D.rows());
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int count = 1;
  while (!stack.empty()) {
    int j = stack.back();
    stack.pop_back();
    for (int k = 0; k < n; ++k) {
      if (k != j && D(j, k) > 0.0 && !seen[k]) {
        seen[k] = 1;
        ++count;
        stack.push_back(k);
      }
    }
  }
  return count == n;
}

}  // namespace

PatchNetwork build_from_edges(int n, const Eigen::VectorXd& m,
                              const std::vector<Edge>& edges) {
  if (n < 2)
    throw Error("validation", "network needs at least 2 patches, got " +
                                  std::to_string(n));
  if (m.size() != n)
    throw Error("dimension-mismatch",
                "m has " + std::to_string(m.size()) + " entries, expected " +
                    std::to_string(n));

  std::set<std::pair<int, int>> seen;
  for (const Edge& e : edges) {
    if (e.j < 1 || e.k < 1 || e.j > n || e.k > n || e.j >= e.k)
      throw Error("index-out-of-range",
                  "edge (" + std::to_string(e.j) + "," + std::to_string(e.k) +
                      ") outside 1 <= j < k <= " + std::to_string(n));
    if (!seen.insert({e.j, e.k}).second)
      throw Error("duplicate-edge", "edge (" + std::to_string(e.j) + "," +
                                        std::to_string(e.k) +
                                        ") listed more than once");
    if (!(e.w > 0.0))
      throw Error("nonpositive-weight",
                  "edge (" + std::to_string(e.j) + "," + std::to_string(e.k) +
                      ") has weight " + format_g17(e.w));
  }

  PatchNetwork net;
  net.n_ = n;
  net.m_ = m;
  net.edges_ = edges;
  std::sort(net.edges_.begin(), net.edges_.end(),
            [](const Edge& a, const Edge& b) {
              return std::make_pair(a.j, a.k) < std::make_pair(b.j, b.k);
            });

  net.D_ = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : net.edges_) {
    net.D_(e.j - 1, e.k - 1) = e.w;
    net.D_(e.k - 1, e.j - 1) = e.w;
  }
  for (int j = 0; j < n; ++j) {
    double off = 0.0;
    for (int k = 0; k < n; ++k)
      if (k != j) off += net.D_(j, k);
    net.D_(j, j) = -off;
  }

  if (!connected(net.D_))
    throw Error("disconnected", "dispersal graph is not connected");
  if (m.maxCoeff() <= 0.0)
    throw Error("no-favorable-patch", "no growth patch");
  return net;
}

ValidationReport validate(const Eigen::MatrixXd& D, const Eigen::VectorXd& m) {
  ValidationReport rep;
  auto fail = [&rep](const std::string& rule, const std::string& detail) {
    rep.ok = false;
    rep.violations.emplace_back(rule, detail);
  };

  const int n = static_cast<int>(D.rows());
  if (D.cols() != n || m.size() != n) {
    fail("dimension", "D must be square with matching m length");
    return rep;
  }
  for (int j = 0; j < n; ++j) {
    for (int k = j + 1; k < n; ++k)
      if (D(j, k) != D(k, j)) {
        fail("symmetry", "D(" + std::to_string(j + 1) + "," +
                             std::to_string(k + 1) + ") != transpose entry");
        break;
      }
    for (int k = 0; k < n; ++k)
      if (k != j && D(j, k) < 0.0) {
        fail("quasi-positive", "negative off-diagonal in row " +
                                   std::to_string(j + 1));
        break;
      }
    double row = D.row(j).sum();
    if (std::abs(row) > 1e-12)
      fail("row-sum", "row " + std::to_string(j + 1) + " sums to " +
                          format_g17(row));
  }
  if (!connected(D)) fail("irreducible", "dispersal graph is not connected");
  if (m.maxCoeff() <= 0.0) fail("favorable-patch", "no growth patch");
  return rep;
}

ValidationReport validate(const PatchNetwork& net) {
  return validate(net.D(), net.m());
}

PatchNetwork paper_network_9() {
  Eigen::VectorXd m(9);
  m << 10, 8, 16, 20, 24, 12, 18, 6, 14;
  std::vector<Edge> edges = {{1, 2, 3}, {1, 4, 2}, {2, 3, 1}, {2, 5, 4},
                             {3, 6, 3}, {4, 5, 2}, {4, 7, 1}, {5, 6, 2},
                             {5, 8, 5}, {6, 9, 2}, {7, 8, 3}, {8, 9, 1}};
  return build_from_edges(9, m, edges);
}

PatchNetwork grid_network(int rows, int cols, double coupling,
                          const Eigen::VectorXd& m) {
  if (rows < 1 || cols < 1 || rows * cols < 2)
    throw Error("validation", "grid must contain at least 2 patches");
  if (!(coupling > 0.0))
    throw Error("nonpositive-weight",
                "grid coupling must be positive, got " + format_g17(coupling));
  std::vector<Edge> edges;
  auto id = [cols](int i, int j) { return i * cols + j + 1; };
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      if (j + 1 < cols) edges.push_back({id(i, j), id(i, j + 1), coupling});
      if (i + 1 < rows) edges.push_back({id(i, j), id(i + 1, j), coupling});
    }
  return build_from_edges(rows * cols, m, edges);
}

PatchNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open '" + path + "'");

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error("parse-error", std::string(e.what()));
  }

  if (!doc.is_object())
    throw Error("parse-error", "top level must be an object");
  for (const auto& item : doc.items())
    if (item.key() != "n" && item.key() != "m" && item.key() != "edges")
      throw Error("parse-error", "unknown key '" + item.key() + "'");
  for (const char* key : {"n", "m", "edges"})
    if (!doc.contains(key))
      throw Error("parse-error", std::string("missing key '") + key + "'");

  if (!doc["n"].is_number_integer())
    throw Error("parse-error", "field 'n' must be an integer");
  const int n = doc["n"].get<int>();

  if (!doc["m"].is_array())
    throw Error("parse-error", "field 'm' must be an array");
  Eigen::VectorXd m(doc["m"].size());
  for (size_t i = 0; i < doc["m"].size(); ++i) {
    if (!doc["m"][i].is_number())
      throw Error("parse-error", "m[" + std::to_string(i) + "] is not a number");
    m(static_cast<Eigen::Index>(i)) = doc["m"][i].get<double>();
  }

  if (!doc["edges"].is_array())
    throw Error("parse-error", "field 'edges' must be an array");
  std::vector<Edge> edges;
  for (size_t i = 0; i < doc["edges"].size(); ++i) {
    const auto& e = doc["edges"][i];
    if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
        !e[1].is_number_integer() || !e[2].is_number())
      throw Error("parse-error",
                  "edges[" + std::to_string(i) + "] must be [j, k, w]");
    edges.push_back({e[0].get<int>(), e[1].get<int>(), e[2].get<double>()});
  }

  return build_from_edges(n, m, edges);
}

void save_network(const PatchNetwork& net, const std::string& path) {
  nlohmann::ordered_json doc;
  doc["n"] = net.n();
  doc["m"] = std::vector<double>(net.m().data(), net.m().data() + net.n());
  auto& e = doc["edges"] = nlohmann::ordered_json::array();
  for (const Edge& edge : net.edges())
    e.push_back({edge.j, edge.k, edge.w});

  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write '" + path + "'");
  out << doc.dump(2) << "\n";
}

}  // namespace patchhopf
