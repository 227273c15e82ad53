#include "edge360/rl/kernels.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace edge360::rl::kernels {

namespace {

std::atomic<Backend> g_backend{
#ifdef _OPENMP
    Backend::kParallel
#else
    Backend::kSerial
#endif
};

void check(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

// Per-output-element bodies shared by both backends. Every element is a
// self-contained serial reduction, which is what makes the two backends
// bit-identical.

inline void matmul_nt_row(const Matrix& a, const Matrix& b, Matrix& c, int i) {
  const double* arow = a.row(i);
  double* crow = c.row(i);
  for (int j = 0; j < b.rows; ++j) {
    const double* brow = b.row(j);
    double acc = 0.0;
    for (int k = 0; k < a.cols; ++k) acc += arow[k] * brow[k];
    crow[j] = acc;
  }
}

inline void matmul_nn_row(const Matrix& a, const Matrix& b, Matrix& c, int i) {
  const double* arow = a.row(i);
  double* crow = c.row(i);
  for (int j = 0; j < b.cols; ++j) {
    double acc = 0.0;
    for (int k = 0; k < b.rows; ++k) acc += arow[k] * b(k, j);
    crow[j] = acc;
  }
}

inline void matmul_tn_acc_row(const Matrix& a, const Matrix& b, Matrix& c, int i) {
  double* crow = c.row(i);
  for (int j = 0; j < b.cols; ++j) {
    double acc = 0.0;
    for (int k = 0; k < a.rows; ++k) acc += a(k, i) * b(k, j);
    crow[j] += acc;
  }
}

inline void conv_forward_row(const Matrix& x, const Matrix& w, const Matrix& bias, int blocks,
                             int in_width, Matrix& y, int r) {
  const int channels = w.rows;
  const int ksize = w.cols;
  const int out_width = in_width - ksize + 1;
  const double* xr = x.row(r);
  double* yr = y.row(r);
  for (int blk = 0; blk < blocks; ++blk) {
    const double* seg = xr + blk * in_width;
    double* out = yr + blk * channels * out_width;
    for (int ch = 0; ch < channels; ++ch) {
      const double* kern = w.row(ch);
      for (int p = 0; p < out_width; ++p) {
        double acc = bias(0, ch);
        for (int t = 0; t < ksize; ++t) acc += kern[t] * seg[p + t];
        out[ch * out_width + p] = acc;
      }
    }
  }
}

inline void conv_backward_input_row(const Matrix& dy, const Matrix& w, int blocks, int in_width,
                                    Matrix& dx, int r) {
  const int channels = w.rows;
  const int ksize = w.cols;
  const int out_width = in_width - ksize + 1;
  const double* dyr = dy.row(r);
  double* dxr = dx.row(r);
  for (int i = 0; i < dx.cols; ++i) dxr[i] = 0.0;
  for (int blk = 0; blk < blocks; ++blk) {
    const double* dseg = dyr + blk * channels * out_width;
    double* dxseg = dxr + blk * in_width;
    for (int ch = 0; ch < channels; ++ch) {
      const double* kern = w.row(ch);
      for (int p = 0; p < out_width; ++p) {
        const double g = dseg[ch * out_width + p];
        for (int t = 0; t < ksize; ++t) dxseg[p + t] += g * kern[t];
      }
    }
  }
}

// One (channel, tap) weight-gradient cell: full serial reduction.
inline void conv_backward_weight_cell(const Matrix& x, const Matrix& dy, int blocks, int in_width,
                                      int channels, int ksize, Matrix& dw, int ch, int t) {
  const int out_width = in_width - ksize + 1;
  double acc = 0.0;
  for (int r = 0; r < x.rows; ++r) {
    const double* xr = x.row(r);
    const double* dyr = dy.row(r);
    for (int blk = 0; blk < blocks; ++blk) {
      const double* seg = xr + blk * in_width;
      const double* dseg = dyr + blk * channels * out_width + ch * out_width;
      for (int p = 0; p < out_width; ++p) acc += dseg[p] * seg[p + t];
    }
  }
  dw(ch, t) += acc;
}

inline void conv_backward_bias_cell(const Matrix& dy, int blocks, int in_width, int channels,
                                    int ksize, Matrix& dbias, int ch) {
  const int out_width = in_width - ksize + 1;
  double acc = 0.0;
  for (int r = 0; r < dy.rows; ++r) {
    const double* dyr = dy.row(r);
    for (int blk = 0; blk < blocks; ++blk) {
      const double* dseg = dyr + blk * channels * out_width + ch * out_width;
      for (int p = 0; p < out_width; ++p) acc += dseg[p];
    }
  }
  dbias(0, ch) += acc;
}

inline void log_softmax_row(const Matrix& logits, int block, Matrix& logp, int r) {
  const double* in = logits.row(r);
  double* out = logp.row(r);
  for (int start = 0; start < logits.cols; start += block) {
    double mx = in[start];
    for (int j = 1; j < block; ++j) mx = std::max(mx, in[start + j]);
    double sum = 0.0;
    for (int j = 0; j < block; ++j) sum += std::exp(in[start + j] - mx);
    const double lse = mx + std::log(sum);
    for (int j = 0; j < block; ++j) out[start + j] = in[start + j] - lse;
  }
}

bool parallel_active() { return g_backend.load() == Backend::kParallel; }

}  // namespace

Backend active_backend() { return g_backend.load(); }
void set_backend(Backend backend) { g_backend.store(backend); }

namespace serial {

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  for (int i = 0; i < a.rows; ++i) matmul_nt_row(a, b, c, i);
}
void matmul_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  for (int i = 0; i < a.rows; ++i) matmul_nn_row(a, b, c, i);
}
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  for (int i = 0; i < c.rows; ++i) matmul_tn_acc_row(a, b, c, i);
}
void conv1d_forward(const Matrix& x, const Matrix& w, const Matrix& bias, int blocks,
                    int in_width, Matrix& y) {
  for (int r = 0; r < x.rows; ++r) conv_forward_row(x, w, bias, blocks, in_width, y, r);
}
void conv1d_backward_input(const Matrix& dy, const Matrix& w, int blocks, int in_width,
                           Matrix& dx) {
  for (int r = 0; r < dy.rows; ++r) conv_backward_input_row(dy, w, blocks, in_width, dx, r);
}
void conv1d_backward_params(const Matrix& x, const Matrix& dy, int blocks, int in_width,
                            int channels, int ksize, Matrix& dw, Matrix& dbias) {
  for (int ch = 0; ch < channels; ++ch) {
    for (int t = 0; t < ksize; ++t) {
      conv_backward_weight_cell(x, dy, blocks, in_width, channels, ksize, dw, ch, t);
    }
    conv_backward_bias_cell(dy, blocks, in_width, channels, ksize, dbias, ch);
  }
}
void log_softmax_blocks(const Matrix& logits, int block, Matrix& logp) {
  for (int r = 0; r < logits.rows; ++r) log_softmax_row(logits, block, logp, r);
}

}  // namespace serial

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  check(a.cols == b.cols, "matmul_nt: inner dims");
  check(c.rows == a.rows && c.cols == b.rows, "matmul_nt: output dims");
  if (!parallel_active()) return serial::matmul_nt(a, b, c);
#pragma omp parallel for schedule(static) if (a.rows > 1)
  for (int i = 0; i < a.rows; ++i) matmul_nt_row(a, b, c, i);
}

void matmul_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  check(a.cols == b.rows, "matmul_nn: inner dims");
  check(c.rows == a.rows && c.cols == b.cols, "matmul_nn: output dims");
  if (!parallel_active()) return serial::matmul_nn(a, b, c);
#pragma omp parallel for schedule(static) if (a.rows > 1)
  for (int i = 0; i < a.rows; ++i) matmul_nn_row(a, b, c, i);
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  check(a.rows == b.rows, "matmul_tn_acc: inner dims");
  check(c.rows == a.cols && c.cols == b.cols, "matmul_tn_acc: output dims");
  if (!parallel_active()) return serial::matmul_tn_acc(a, b, c);
#pragma omp parallel for schedule(static) if (c.rows > 1)
  for (int i = 0; i < c.rows; ++i) matmul_tn_acc_row(a, b, c, i);
}

void add_bias_rows(Matrix& y, const Matrix& bias) {
  check(bias.rows == 1 && bias.cols == y.cols, "add_bias_rows: bias dims");
  for (int i = 0; i < y.rows; ++i) {
    double* row = y.row(i);
    for (int j = 0; j < y.cols; ++j) row[j] += bias(0, j);
  }
}

void col_sums_acc(const Matrix& dy, Matrix& bias_grad) {
  check(bias_grad.rows == 1 && bias_grad.cols == dy.cols, "col_sums_acc: dims");
  for (int j = 0; j < dy.cols; ++j) {
    double acc = 0.0;
    for (int i = 0; i < dy.rows; ++i) acc += dy(i, j);
    bias_grad(0, j) += acc;
  }
}

void relu(const Matrix& x, Matrix& y) {
  check(x.rows == y.rows && x.cols == y.cols, "relu: dims");
  for (std::size_t i = 0; i < x.size(); ++i) y.v[i] = x.v[i] > 0.0 ? x.v[i] : 0.0;
}

void relu_backward(const Matrix& x_pre, const Matrix& dy, Matrix& dx) {
  check(x_pre.size() == dy.size() && dx.size() == dy.size(), "relu_backward: dims");
  for (std::size_t i = 0; i < dy.size(); ++i) dx.v[i] = x_pre.v[i] > 0.0 ? dy.v[i] : 0.0;
}

void conv1d_forward(const Matrix& x, const Matrix& w, const Matrix& bias, int blocks,
                    int in_width, Matrix& y) {
  const int out_width = in_width - w.cols + 1;
  check(out_width >= 1, "conv1d: kernel wider than input");
  check(x.cols == blocks * in_width, "conv1d_forward: input dims");
  check(y.rows == x.rows && y.cols == blocks * w.rows * out_width, "conv1d_forward: output dims");
  if (!parallel_active()) return serial::conv1d_forward(x, w, bias, blocks, in_width, y);
#pragma omp parallel for schedule(static) if (x.rows > 1)
  for (int r = 0; r < x.rows; ++r) conv_forward_row(x, w, bias, blocks, in_width, y, r);
}

void conv1d_backward_input(const Matrix& dy, const Matrix& w, int blocks, int in_width,
                           Matrix& dx) {
  check(dx.rows == dy.rows && dx.cols == blocks * in_width, "conv1d_backward_input: dims");
  if (!parallel_active()) return serial::conv1d_backward_input(dy, w, blocks, in_width, dx);
#pragma omp parallel for schedule(static) if (dy.rows > 1)
  for (int r = 0; r < dy.rows; ++r) conv_backward_input_row(dy, w, blocks, in_width, dx, r);
}

void conv1d_backward_params(const Matrix& x, const Matrix& dy, int blocks, int in_width,
                            int channels, int ksize, Matrix& dw, Matrix& dbias) {
  check(dw.rows == channels && dw.cols == ksize, "conv1d_backward_params: dw dims");
  check(dbias.rows == 1 && dbias.cols == channels, "conv1d_backward_params: dbias dims");
  if (!parallel_active()) {
    return serial::conv1d_backward_params(x, dy, blocks, in_width, channels, ksize, dw, dbias);
  }
#pragma omp parallel for schedule(static) collapse(2) if (channels * ksize > 1)
  for (int ch = 0; ch < channels; ++ch) {
    for (int t = 0; t < ksize; ++t) {
      conv_backward_weight_cell(x, dy, blocks, in_width, channels, ksize, dw, ch, t);
    }
  }
#pragma omp parallel for schedule(static) if (channels > 1)
  for (int ch = 0; ch < channels; ++ch) {
    conv_backward_bias_cell(dy, blocks, in_width, channels, ksize, dbias, ch);
  }
}

void log_softmax_blocks(const Matrix& logits, int block, Matrix& logp) {
  check(block > 0 && logits.cols % block == 0, "log_softmax_blocks: block width");
  check(logp.rows == logits.rows && logp.cols == logits.cols, "log_softmax_blocks: dims");
  if (!parallel_active()) return serial::log_softmax_blocks(logits, block, logp);
#pragma omp parallel for schedule(static) if (logits.rows > 1)
  for (int r = 0; r < logits.rows; ++r) log_softmax_row(logits, block, logp, r);
}

}  // namespace edge360::rl::kernels
