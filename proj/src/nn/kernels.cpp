#include "empcn/nn/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace empcn::nn {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values) : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != r * c) throw std::invalid_argument("matrix data does not match shape");
}

SegmentIndex::SegmentIndex(std::span<const std::uint32_t> segment_of_row, std::size_t n)
    : num_segments(n), offsets(n + 1, 0), rows(segment_of_row.size()) {
    for (auto s : segment_of_row) {
        if (s >= n) throw std::out_of_range("segment id out of range");
        ++offsets[s + 1];
    }
    for (std::size_t s = 0; s < n; ++s) offsets[s + 1] += offsets[s];
    std::vector<std::size_t> fill(offsets.begin(), offsets.end() - 1);
    for (std::uint32_t r = 0; r < segment_of_row.size(); ++r) rows[fill[segment_of_row[r]]++] = r;
}

namespace kernels {

namespace {

constexpr std::size_t kParallelWork = 1 << 14;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// wt is w transposed (k×m) so the inner loop runs over outputs; each y[j]
// still accumulates x[c] * w[j][c] for c = 0..k-1 in order.
inline void dense_row(const double* x, const Matrix& wt, const Matrix* b, double* y) {
    const std::size_t m = wt.cols;
    for (std::size_t j = 0; j < m; ++j) y[j] = 0.0;
    for (std::size_t c = 0; c < wt.rows; ++c) {
        const double xc = x[c];
        const double* wc = wt.row(c);
        for (std::size_t j = 0; j < m; ++j) y[j] += xc * wc[j];
    }
    if (b)
        for (std::size_t j = 0; j < m; ++j) y[j] += b->data[j];
}

Matrix transpose(const Matrix& w) {
    Matrix t(w.cols, w.rows);
    for (std::size_t j = 0; j < w.rows; ++j)
        for (std::size_t c = 0; c < w.cols; ++c) t(c, j) = w(j, c);
    return t;
}

inline void dense_input_grad_row(const double* gy, const Matrix& w, double* gx) {
    for (std::size_t j = 0; j < w.rows; ++j) {
        const double g = gy[j];
        if (g == 0.0) continue;
        const double* wj = w.row(j);
        for (std::size_t c = 0; c < w.cols; ++c) gx[c] += g * wj[c];
    }
}

inline void segment_row(const Matrix& x, const SegmentIndex& seg, std::size_t s, double* y) {
    for (std::size_t c = 0; c < x.cols; ++c) y[c] = 0.0;
    for (std::size_t p = seg.offsets[s]; p < seg.offsets[s + 1]; ++p) {
        const double* xr = x.row(seg.rows[p]);
        for (std::size_t c = 0; c < x.cols; ++c) y[c] += xr[c];
    }
}

inline double swish(double x) { return x * sigmoid(x); }
inline double swish_grad(double x) {
    const double s = sigmoid(x);
    return s * (1.0 + x * (1.0 - s));
}

void check_dense(const Matrix& x, const Matrix& w, const Matrix* b) {
    if (x.cols != w.cols) throw std::invalid_argument("dense: input width does not match weight columns");
    if (b && b->size() != w.rows) throw std::invalid_argument("dense: bias size does not match weight rows");
}

}  // namespace

void dense_forward(const Matrix& x, const Matrix& w, const Matrix* b, Matrix& y) {
    check_dense(x, w, b);
    y = Matrix(x.rows, w.rows);
    const Matrix wt = transpose(w);
    const auto n = static_cast<std::int64_t>(x.rows);
#pragma omp parallel for if (x.size() * w.rows > kParallelWork)
    for (std::int64_t r = 0; r < n; ++r) dense_row(x.row(static_cast<std::size_t>(r)), wt, b, y.row(static_cast<std::size_t>(r)));
}

void dense_backward_input(const Matrix& gy, const Matrix& w, Matrix& gx) {
    const auto n = static_cast<std::int64_t>(gy.rows);
#pragma omp parallel for if (gy.size() * w.cols > kParallelWork)
    for (std::int64_t r = 0; r < n; ++r)
        dense_input_grad_row(gy.row(static_cast<std::size_t>(r)), w, gx.row(static_cast<std::size_t>(r)));
}

void dense_backward_params(const Matrix& gy, const Matrix& x, Matrix& gw, Matrix* gb) {
    const auto m = static_cast<std::int64_t>(gw.rows);
#pragma omp parallel for if (gy.size() * x.cols > kParallelWork)
    for (std::int64_t jj = 0; jj < m; ++jj) {
        const auto j = static_cast<std::size_t>(jj);
        double* gwj = gw.row(j);
        for (std::size_t r = 0; r < gy.rows; ++r) {
            const double g = gy(r, j);
            if (gb) gb->data[j] += g;
            if (g == 0.0) continue;
            const double* xr = x.row(r);
            for (std::size_t c = 0; c < x.cols; ++c) gwj[c] += g * xr[c];
        }
    }
}

void segment_sum(const Matrix& x, const SegmentIndex& seg, Matrix& y) {
    y = Matrix(seg.num_segments, x.cols);
    const auto n = static_cast<std::int64_t>(seg.num_segments);
#pragma omp parallel for if (x.size() > kParallelWork)
    for (std::int64_t s = 0; s < n; ++s) segment_row(x, seg, static_cast<std::size_t>(s), y.row(static_cast<std::size_t>(s)));
}

void gather_rows(const Matrix& x, std::span<const std::uint32_t> idx, Matrix& y) {
    y = Matrix(idx.size(), x.cols);
    const auto n = static_cast<std::int64_t>(idx.size());
#pragma omp parallel for if (idx.size() * x.cols > kParallelWork)
    for (std::int64_t r = 0; r < n; ++r) {
        const double* src = x.row(idx[static_cast<std::size_t>(r)]);
        double* dst = y.row(static_cast<std::size_t>(r));
        for (std::size_t c = 0; c < x.cols; ++c) dst[c] = src[c];
    }
}

void swish_forward(const Matrix& x, Matrix& y) {
    y = Matrix(x.rows, x.cols);
    const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for if (x.size() > kParallelWork)
    for (std::int64_t i = 0; i < n; ++i) y.data[static_cast<std::size_t>(i)] = swish(x.data[static_cast<std::size_t>(i)]);
}

void swish_backward(const Matrix& x, const Matrix& gy, Matrix& gx) {
    const auto n = static_cast<std::int64_t>(x.size());
#pragma omp parallel for if (x.size() > kParallelWork)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        gx.data[k] += gy.data[k] * swish_grad(x.data[k]);
    }
}

namespace serial {

void dense_forward(const Matrix& x, const Matrix& w, const Matrix* b, Matrix& y) {
    check_dense(x, w, b);
    y = Matrix(x.rows, w.rows);
    const Matrix wt = transpose(w);
    for (std::size_t r = 0; r < x.rows; ++r) dense_row(x.row(r), wt, b, y.row(r));
}

void dense_backward_input(const Matrix& gy, const Matrix& w, Matrix& gx) {
    for (std::size_t r = 0; r < gy.rows; ++r) dense_input_grad_row(gy.row(r), w, gx.row(r));
}

void dense_backward_params(const Matrix& gy, const Matrix& x, Matrix& gw, Matrix* gb) {
    for (std::size_t r = 0; r < gy.rows; ++r) {
        const double* xr = x.row(r);
        for (std::size_t j = 0; j < gw.rows; ++j) {
            const double g = gy(r, j);
            if (gb) gb->data[j] += g;
            if (g == 0.0) continue;
            double* gwj = gw.row(j);
            for (std::size_t c = 0; c < x.cols; ++c) gwj[c] += g * xr[c];
        }
    }
}

void segment_sum(const Matrix& x, const SegmentIndex& seg, Matrix& y) {
    y = Matrix(seg.num_segments, x.cols);
    for (std::size_t s = 0; s < seg.num_segments; ++s) segment_row(x, seg, s, y.row(s));
}

void gather_rows(const Matrix& x, std::span<const std::uint32_t> idx, Matrix& y) {
    y = Matrix(idx.size(), x.cols);
    for (std::size_t r = 0; r < idx.size(); ++r)
        for (std::size_t c = 0; c < x.cols; ++c) y(r, c) = x(idx[r], c);
}

void swish_forward(const Matrix& x, Matrix& y) {
    y = Matrix(x.rows, x.cols);
    for (std::size_t i = 0; i < x.size(); ++i) y.data[i] = swish(x.data[i]);
}

void swish_backward(const Matrix& x, const Matrix& gy, Matrix& gx) {
    for (std::size_t i = 0; i < x.size(); ++i) gx.data[i] += gy.data[i] * swish_grad(x.data[i]);
}

}  // namespace serial

}  // namespace kernels
}  // namespace empcn::nn
