#pragma once

#include "edge360/rl/tensor.hpp"

namespace edge360::rl::kernels {

// The parallel backend splits work over independent output elements only —
// no reduction is ever shared between threads — so both backends produce
// bit-identical results and the serial path doubles as the test reference.
enum class Backend { kSerial, kParallel };

Backend active_backend();
void set_backend(Backend backend);

// c = a * b^T; a is m×k, b is n×k, c is m×n.
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c);
// c = a * b; a is m×k, b is k×n, c is m×n.
void matmul_nn(const Matrix& a, const Matrix& b, Matrix& c);
// c += a^T * b; a is k×m, b is k×n, c is m×n.
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);

// y(i,:) += bias (bias is 1×cols).
void add_bias_rows(Matrix& y, const Matrix& bias);
// bias_grad(0,:) += column sums of dy.
void col_sums_acc(const Matrix& dy, Matrix& bias_grad);

// y = max(x, 0); dx = dy where x > 0.
void relu(const Matrix& x, Matrix& y);
void relu_backward(const Matrix& x_pre, const Matrix& dy, Matrix& dx);

// 1-D valid convolution applied independently to `blocks` segments of width
// in_width in every row, kernels shared across blocks and rows.
// x: batch×(blocks*in_width); w: channels×ksize; bias: 1×channels;
// y: batch×(blocks*channels*out_width) with out_width = in_width-ksize+1.
void conv1d_forward(const Matrix& x, const Matrix& w, const Matrix& bias, int blocks,
                    int in_width, Matrix& y);
void conv1d_backward_input(const Matrix& dy, const Matrix& w, int blocks, int in_width,
                           Matrix& dx);
void conv1d_backward_params(const Matrix& x, const Matrix& dy, int blocks, int in_width,
                            int channels, int ksize, Matrix& dw, Matrix& dbias);

// In-row log-softmax over consecutive blocks of `block` columns.
void log_softmax_blocks(const Matrix& logits, int block, Matrix& logp);

// Serial reference implementations (always available, used by the
// backend-equivalence tests and the benchmark).
namespace serial {
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_nn(const Matrix& a, const Matrix& b, Matrix& c);
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c);
void conv1d_forward(const Matrix& x, const Matrix& w, const Matrix& bias, int blocks,
                    int in_width, Matrix& y);
void conv1d_backward_input(const Matrix& dy, const Matrix& w, int blocks, int in_width,
                           Matrix& dx);
void conv1d_backward_params(const Matrix& x, const Matrix& dy, int blocks, int in_width,
                            int channels, int ksize, Matrix& dw, Matrix& dbias);
void log_softmax_blocks(const Matrix& logits, int block, Matrix& logp);
}  // namespace serial

}  // namespace edge360::rl::kernels
