#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>

namespace oracles {

using cd = std::complex<double>;

std::complex<double> det_lu(Eigen::MatrixXcd A) {
  const int n = static_cast<int>(A.rows());
  cd det = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int row = col + 1; row < n; ++row)
      if (std::abs(A(row, col)) > std::abs(A(piv, col))) piv = row;
    if (A(piv, col) == cd(0.0)) return 0.0;
    if (piv != col) {
      A.row(piv).swap(A.row(col));
      det = -det;
    }
    det *= A(col, col);
    for (int row = col + 1; row < n; ++row) {
      const cd f = A(row, col) / A(col, col);
      for (int k = col + 1; k < n; ++k) A(row, k) -= f * A(col, k);
    }
  }
  return det;
}

std::complex<double> char_det(const patchhopf::PatchNetwork& net, double d,
                              const Eigen::VectorXd& u, double theta,
                              double nu) {
  const int n = net.n();
  Eigen::MatrixXcd A = (d * net.D()).cast<cd>();
  const cd phase = std::exp(cd(0.0, -theta));
  for (int j = 0; j < n; ++j)
    A(j, j) += net.m()(j) - u(j) - phase * u(j) - cd(0.0, nu);
  return det_lu(std::move(A));
}

namespace {

// 2D Newton on (Re det, Im det) with a finite-difference Jacobian. Returns
// true when the step size contracts below 1e-10 while staying within
// max_move of the start.
bool polish_root(const patchhopf::PatchNetwork& net, double d,
                 const Eigen::VectorXd& u, double max_move, double* theta,
                 double* nu) {
  const double t0 = *theta, n0 = *nu;
  double t = t0, v = n0;
  for (int it = 0; it < 60; ++it) {
    const cd f = char_det(net, d, u, t, v);
    const double ht = 1e-7 * (1.0 + std::abs(t));
    const double hv = 1e-7 * (1.0 + std::abs(v));
    const cd ft = (char_det(net, d, u, t + ht, v) -
                   char_det(net, d, u, t - ht, v)) /
                  (2.0 * ht);
    const cd fv = (char_det(net, d, u, t, v + hv) -
                   char_det(net, d, u, t, v - hv)) /
                  (2.0 * hv);
    // Solve [Re ft, Re fv; Im ft, Im fv] (dt, dv)^T = -(Re f, Im f)^T.
    const double a = ft.real(), b = fv.real(), c = ft.imag(), e = fv.imag();
    const double det2 = a * e - b * c;
    if (det2 == 0.0) return false;
    double dt = -(f.real() * e - b * f.imag()) / det2;
    double dv = -(a * f.imag() - f.real() * c) / det2;
    const double step = std::max(std::abs(dt), std::abs(dv));
    if (step > 0.5 * max_move) {
      dt *= 0.5 * max_move / step;
      dv *= 0.5 * max_move / step;
    }
    t += dt;
    v += dv;
    if (std::abs(t - t0) > max_move || std::abs(v - n0) > max_move)
      return false;
    if (step < 1e-10 * (1.0 + std::abs(t) + std::abs(v))) {
      *theta = t;
      *nu = v;
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<DetRoot> det_grid_roots(const patchhopf::PatchNetwork& net,
                                    double d, const Eigen::VectorXd& u,
                                    int grid_theta, int grid_nu,
                                    double nu_max) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double cell_t = two_pi / grid_theta;
  const double cell_n = nu_max / grid_nu;

  Eigen::MatrixXd re(grid_theta + 1, grid_nu + 1);
  Eigen::MatrixXd im(grid_theta + 1, grid_nu + 1);
  for (int i = 0; i <= grid_theta; ++i)
    for (int j = 0; j <= grid_nu; ++j) {
      const cd f = char_det(net, d, u, i * cell_t, j * cell_n);
      re(i, j) = f.real();
      im(i, j) = f.imag();
    }

  auto sign_change = [](double a, double b, double c, double e) {
    const double lo = std::min(std::min(a, b), std::min(c, e));
    const double hi = std::max(std::max(a, b), std::max(c, e));
    return lo < 0.0 && hi > 0.0;
  };

  std::vector<std::vector<char>> marked(
      grid_theta, std::vector<char>(grid_nu, 0));
  for (int i = 0; i < grid_theta; ++i)
    for (int j = 0; j < grid_nu; ++j)
      marked[i][j] =
          sign_change(re(i, j), re(i + 1, j), re(i, j + 1), re(i + 1, j + 1)) &&
          sign_change(im(i, j), im(i + 1, j), im(i, j + 1), im(i + 1, j + 1));

  // Cluster marked cells (8-connected) and polish each cluster centroid.
  std::vector<DetRoot> roots;
  std::vector<std::vector<char>> seen(grid_theta,
                                      std::vector<char>(grid_nu, 0));
  for (int i = 0; i < grid_theta; ++i) {
    for (int j = 0; j < grid_nu; ++j) {
      if (!marked[i][j] || seen[i][j]) continue;
      double sum_t = 0.0, sum_n = 0.0;
      int count = 0;
      std::queue<std::pair<int, int>> frontier;
      frontier.push({i, j});
      seen[i][j] = 1;
      while (!frontier.empty()) {
        auto [ci, cj] = frontier.front();
        frontier.pop();
        sum_t += (ci + 0.5) * cell_t;
        sum_n += (cj + 0.5) * cell_n;
        ++count;
        for (int di = -1; di <= 1; ++di)
          for (int dj = -1; dj <= 1; ++dj) {
            const int ni = ci + di, nj = cj + dj;
            if (ni < 0 || nj < 0 || ni >= grid_theta || nj >= grid_nu)
              continue;
            if (!marked[ni][nj] || seen[ni][nj]) continue;
            seen[ni][nj] = 1;
            frontier.push({ni, nj});
          }
      }
      double theta = sum_t / count;
      double nu = sum_n / count;
      // A cluster where both determinant components merely pass nearby
      // without a common zero fails to polish and is dropped.
      const double max_move = 4.0 * std::max(cell_t, cell_n) +
                              2.0 * std::max(cell_t, cell_n) * count;
      if (!polish_root(net, d, u, max_move, &theta, &nu)) continue;
      if (nu < 0.5 * cell_n) continue;  // conjugate-axis artifacts
      roots.push_back({theta, nu});
    }
  }

  // Distinct clusters can polish onto the same root.
  std::vector<DetRoot> unique;
  for (const DetRoot& r : roots) {
    bool dup = false;
    for (const DetRoot& k : unique)
      if (std::abs(k.theta - r.theta) < 1e-6 * (1.0 + std::abs(k.theta)) &&
          std::abs(k.nu - r.nu) < 1e-6 * (1.0 + std::abs(k.nu)))
        dup = true;
    if (!dup) unique.push_back(r);
  }
  std::sort(unique.begin(), unique.end(), [](const DetRoot& a,
                                             const DetRoot& b) {
    return a.theta / a.nu < b.theta / b.nu;
  });
  return unique;
}

bool connected_reference(const Eigen::MatrixXd& D) {
  const int n = static_cast<int>(D.rows());
  std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      reach[i][j] = (i == j) || D(i, j) > 0.0;

  // Boolean power (I + pattern)^(n-1).
  auto multiply = [n](const std::vector<std::vector<char>>& a,
                      const std::vector<std::vector<char>>& b) {
    std::vector<std::vector<char>> c(n, std::vector<char>(n, 0));
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k)
        if (a[i][k])
          for (int j = 0; j < n; ++j)
            if (b[k][j]) c[i][j] = 1;
    return c;
  };
  std::vector<std::vector<char>> power = reach;
  for (int step = 2; step <= n - 1; ++step) power = multiply(power, reach);

  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!power[i][j]) return false;
  return true;
}

patchhopf::PatchNetwork random_network(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> weight(0.2, 2.0);
  std::uniform_real_distribution<double> growth(-3.0, 3.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<patchhopf::Edge> edges;
  for (int v = 2; v <= n; ++v) {
    std::uniform_int_distribution<int> parent(1, v - 1);
    edges.push_back({parent(rng), v, weight(rng)});
  }
  for (int j = 1; j <= n; ++j)
    for (int k = j + 1; k <= n; ++k) {
      bool present = false;
      for (const patchhopf::Edge& e : edges)
        present = present || (e.j == j && e.k == k);
      if (!present && unit(rng) < 0.3) edges.push_back({j, k, weight(rng)});
    }

  Eigen::VectorXd m(n);
  for (int j = 0; j < n; ++j) m(j) = growth(rng);
  if (m.maxCoeff() <= 0.0) {
    std::uniform_int_distribution<int> pick(0, n - 1);
    const int idx = pick(rng);
    m(idx) = 0.5 + std::abs(m(idx));
  }
  return patchhopf::build_from_edges(n, m, edges);
}

double two_patch_spectral_bound(double m1, double m2, double w,
                                double lambda) {
  const double a = lambda * m1 - w;
  const double c = lambda * m2 - w;
  return 0.5 * ((a + c) + std::sqrt((a - c) * (a - c) + 4.0 * w * w));
}

}  // namespace oracles
