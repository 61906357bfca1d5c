#ifndef PATCHHOPF_NETWORK_HPP
#define PATCHHOPF_NETWORK_HPP

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

namespace patchhopf {

// Undirected dispersal link between patches j < k (1-based ids) with
// positive weight w.
struct Edge {
  int j = 0;
  int k = 0;
  double w = 0.0;

  friend bool operator==(const Edge& a, const Edge& b) {
    return a.j == b.j && a.k == b.k && a.w == b.w;
  }
};

struct ValidationReport {
  bool ok = true;
  // (rule id, detail) for every violated rule.
  std::vector<std::pair<std::string, std::string>> violations;
};

// A connected patch network: symmetric dispersal matrix D with nonnegative
// off-diagonal entries and zero row sums (diagonal holds the negated row
// sum), plus per-patch intrinsic growth rates m. Patch indices are 1-based
// everywhere in the public interface. Instances are immutable once built.
class PatchNetwork {
public:
  int n() const { return n_; }
  const Eigen::VectorXd& m() const { return m_; }
  const Eigen::MatrixXd& D() const { return D_; }
  const std::vector<Edge>& edges() const { return edges_; }

  // Total growth rate sum m_1 + ... + m_n.
  double delta() const { return m_.sum(); }

private:
  PatchNetwork() = default;
  friend PatchNetwork build_from_edges(int n, const Eigen::VectorXd& m,
                                       const std::vector<Edge>& edges);

  int n_ = 0;
  Eigen::VectorXd m_;
  Eigen::MatrixXd D_;
  std::vector<Edge> edges_;
};

// Builds a network from an edge list. Throws Error on structural problems:
// n < 2 ("validation"), size mismatch ("dimension-mismatch"), indices out of
// range or j >= k ("index-out-of-range"), repeated pair ("duplicate-edge"),
// w <= 0 ("nonpositive-weight"), graph not connected ("disconnected"), or no
// patch with m_j > 0 ("no-favorable-patch"). The stored edge list is sorted
// by (j, k).
PatchNetwork build_from_edges(int n, const Eigen::VectorXd& m,
                              const std::vector<Edge>& edges);

// Re-checks symmetry, quasi-positivity, zero row sums, connectivity, and the
// presence of a growth patch on an already built network. Returns a report
// instead of throwing so callers can surface individual rule failures.
ValidationReport validate(const PatchNetwork& net);

// Rule checks on raw matrices, for data that never passed construction.
ValidationReport validate(const Eigen::MatrixXd& D, const Eigen::VectorXd& m);

// Bundled 9-patch reference network used across tests and the CLI builtin
// "paper9".
PatchNetwork paper_network_9();

// rows x cols lattice with 4-neighbor links of uniform weight `coupling`,
// patches numbered row-major starting at 1. m must have rows*cols entries.
PatchNetwork grid_network(int rows, int cols, double coupling,
                          const Eigen::VectorXd& m);

// JSON file format: {"n": <int>, "m": [<n numbers>], "edges": [[j,k,w], ...]}
// with 1-based j < k and every unordered pair listed once. Unknown keys are
// rejected. save followed by load reproduces n, m, and the edge list
// bit for bit.
PatchNetwork load_network(const std::string& path);
void save_network(const PatchNetwork& net, const std::string& path);

}  // namespace patchhopf

#endif
