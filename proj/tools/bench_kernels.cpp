#include <chrono>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "edge360/rl/kernels.hpp"

using edge360::rl::Matrix;
namespace kernels = edge360::rl::kernels;

namespace {

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Matrix m(rows, cols);
  for (auto& x : m.v) x = uni(rng);
  return m;
}

template <typename F>
double time_ms(F&& fn, int reps) {
  // warm-up
  fn();
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

struct Case {
  std::string name;
  double serial_ms;
  double parallel_ms;
  bool identical;
};

void print(const Case& c) {
  std::printf("%-28s %10.3f ms %10.3f ms   x%5.2f   %s\n", c.name.c_str(), c.serial_ms,
              c.parallel_ms, c.parallel_ms > 0 ? c.serial_ms / c.parallel_ms : 0.0,
              c.identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::atoi(argv[1]) : 20;
  std::mt19937_64 rng(7);

#ifdef _OPENMP
  std::printf("OpenMP threads: %d, reps per case: %d\n\n", omp_get_max_threads(), reps);
#else
  std::printf("built without OpenMP; parallel backend == serial, reps per case: %d\n\n", reps);
#endif
  std::printf("%-28s %13s %13s   %7s\n", "kernel", "serial", "parallel", "speedup");

  // Shapes roughly matching a large training batch of the streaming agent.
  const int batch = 512, in = 480, out = 256, users = 6, feat = 80;
  const Matrix x = random_matrix(batch, in, rng);
  const Matrix w = random_matrix(out, in, rng);
  const Matrix dy = random_matrix(batch, out, rng);
  const Matrix obs = random_matrix(batch, users * feat, rng);
  const Matrix cw = random_matrix(8, 3, rng);
  const Matrix cb = random_matrix(1, 8, rng);
  const Matrix logits = random_matrix(batch, users * 64, rng);

  std::vector<Case> cases;

  {
    Matrix ys(batch, out), yp(batch, out);
    const double ts = time_ms([&] { kernels::serial::matmul_nt(x, w, ys); }, reps);
    kernels::set_backend(kernels::Backend::kParallel);
    const double tp = time_ms([&] { kernels::matmul_nt(x, w, yp); }, reps);
    cases.push_back({"matmul_nt 512x480x256", ts, tp, ys == yp});
  }
  {
    Matrix dxs(batch, in), dxp(batch, in);
    const double ts = time_ms([&] { kernels::serial::matmul_nn(dy, w, dxs); }, reps);
    const double tp = time_ms([&] { kernels::matmul_nn(dy, w, dxp); }, reps);
    cases.push_back({"matmul_nn 512x256x480", ts, tp, dxs == dxp});
  }
  {
    Matrix dws(out, in), dwp(out, in);
    const double ts = time_ms(
        [&] {
          dws.fill(0.0);
          kernels::serial::matmul_tn_acc(dy, x, dws);
        },
        reps);
    const double tp = time_ms(
        [&] {
          dwp.fill(0.0);
          kernels::matmul_tn_acc(dy, x, dwp);
        },
        reps);
    cases.push_back({"matmul_tn_acc 256x512x480", ts, tp, dws == dwp});
  }
  {
    const int out_w = feat - cw.cols + 1;
    Matrix ys(batch, users * cw.rows * out_w), yp(batch, users * cw.rows * out_w);
    const double ts =
        time_ms([&] { kernels::serial::conv1d_forward(obs, cw, cb, users, feat, ys); }, reps);
    const double tp = time_ms([&] { kernels::conv1d_forward(obs, cw, cb, users, feat, yp); }, reps);
    cases.push_back({"conv1d_forward 512x6x80", ts, tp, ys == yp});

    Matrix dxs(batch, users * feat), dxp(batch, users * feat);
    const double bis =
        time_ms([&] { kernels::serial::conv1d_backward_input(ys, cw, users, feat, dxs); }, reps);
    const double bip =
        time_ms([&] { kernels::conv1d_backward_input(yp, cw, users, feat, dxp); }, reps);
    cases.push_back({"conv1d_backward_input", bis, bip, dxs == dxp});

    Matrix dws(cw.rows, cw.cols), dbs(1, cw.rows), dwp(cw.rows, cw.cols), dbp(1, cw.rows);
    const double bps = time_ms(
        [&] {
          dws.fill(0.0);
          dbs.fill(0.0);
          kernels::serial::conv1d_backward_params(obs, ys, users, feat, cw.rows, cw.cols, dws, dbs);
        },
        reps);
    const double bpp = time_ms(
        [&] {
          dwp.fill(0.0);
          dbp.fill(0.0);
          kernels::conv1d_backward_params(obs, yp, users, feat, cw.rows, cw.cols, dwp, dbp);
        },
        reps);
    cases.push_back({"conv1d_backward_params", bps, bpp, dws == dwp && dbs == dbp});
  }
  {
    Matrix lps(batch, logits.cols), lpp(batch, logits.cols);
    const double ts = time_ms([&] { kernels::serial::log_softmax_blocks(logits, 64, lps); }, reps);
    const double tp = time_ms([&] { kernels::log_softmax_blocks(logits, 64, lpp); }, reps);
    cases.push_back({"log_softmax 512x(6x64)", ts, tp, lps == lpp});
  }

  bool all_identical = true;
  for (const auto& c : cases) {
    print(c);
    all_identical = all_identical && c.identical;
  }
  if (!all_identical) {
    std::printf("\nbackend mismatch detected\n");
    return 1;
  }
  return 0;
}
