#pragma once

#include <cstdint>
#include <span>

#include "empcn/nn/matrix.hpp"

// Hot loops of the differentiable layer. `kernels::` is the OpenMP version;
// `kernels::serial::` is the reference it is tested against. Every output
// element is accumulated in the same order by both, so results agree bit for
// bit regardless of thread count.
namespace empcn::nn::kernels {

/// y = x w^T (+ b). x: n×k, w: m×k, b: 1×m or null, y: n×m (resized).
void dense_forward(const Matrix& x, const Matrix& w, const Matrix* b, Matrix& y);
/// gx += gy w
void dense_backward_input(const Matrix& gy, const Matrix& w, Matrix& gx);
/// gw += gy^T x, gb += column sums of gy
void dense_backward_params(const Matrix& gy, const Matrix& x, Matrix& gw, Matrix* gb);
/// y[s] = sum of x rows in segment s (zero row for empty segments).
void segment_sum(const Matrix& x, const SegmentIndex& seg, Matrix& y);
/// y[i] = x[idx[i]]
void gather_rows(const Matrix& x, std::span<const std::uint32_t> idx, Matrix& y);
void swish_forward(const Matrix& x, Matrix& y);
/// gx += gy * swish'(x)
void swish_backward(const Matrix& x, const Matrix& gy, Matrix& gx);

namespace serial {
void dense_forward(const Matrix& x, const Matrix& w, const Matrix* b, Matrix& y);
void dense_backward_input(const Matrix& gy, const Matrix& w, Matrix& gx);
void dense_backward_params(const Matrix& gy, const Matrix& x, Matrix& gw, Matrix* gb);
void segment_sum(const Matrix& x, const SegmentIndex& seg, Matrix& y);
void gather_rows(const Matrix& x, std::span<const std::uint32_t> idx, Matrix& y);
void swish_forward(const Matrix& x, Matrix& y);
void swish_backward(const Matrix& x, const Matrix& gy, Matrix& gx);
}  // namespace serial

}  // namespace empcn::nn::kernels
