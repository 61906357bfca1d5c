// Times the eigenvalue-grid kernel in its serial and OpenMP variants on two
// representative workloads and prints a small table. The parallel variant
// must agree with the serial one bitwise; that equality is asserted here as
// well as in the test suite.

#include <chrono>
#include <cstdio>
#include <numbers>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "patchhopf/charroots.hpp"
#include "patchhopf/equilibrium.hpp"
#include "patchhopf/network.hpp"

namespace ph = patchhopf;

namespace {

double time_grid(const ph::PatchNetwork& net, double d,
                 const Eigen::VectorXd& u, const std::vector<double>& thetas,
                 bool parallel, std::vector<Eigen::VectorXcd>* result) {
  const auto start = std::chrono::steady_clock::now();
  *result = ph::eigenvalue_grid(net, d, u, thetas, parallel);
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

void bench_case(const char* name, const ph::PatchNetwork& net, double d,
                int grid) {
  const Eigen::VectorXd u = ph::equilibrium(net, d).u;
  std::vector<double> thetas(grid);
  for (int i = 0; i < grid; ++i)
    thetas[i] = 2.0 * std::numbers::pi * i / grid;

  std::vector<Eigen::VectorXcd> serial, parallel;
  const double t_serial = time_grid(net, d, u, thetas, false, &serial);
  const double t_parallel = time_grid(net, d, u, thetas, true, &parallel);

  bool identical = serial.size() == parallel.size();
  for (size_t i = 0; identical && i < serial.size(); ++i)
    identical = serial[i] == parallel[i];

  std::printf("%-12s n=%-4d grid=%-5d serial %8.3fs  parallel %8.3fs  "
              "speedup %5.2fx  identical %s\n",
              name, net.n(), grid, t_serial, t_parallel,
              t_serial / t_parallel, identical ? "yes" : "NO");
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("compiled without OpenMP; both variants run serially\n");
#endif

  bench_case("paper9", ph::paper_network_9(), 0.5, 4096);

  Eigen::VectorXd m(100);
  for (int i = 0; i < 100; ++i) m(i) = ((i * 7) % 13) - 4.0;
  bench_case("grid10x10", ph::grid_network(10, 10, 1.0, m), 2.0, 256);
  return 0;
}
