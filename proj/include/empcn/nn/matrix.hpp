#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace empcn::nn {

/// Row-major dense matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> values);

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    std::size_t size() const { return data.size(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Rows grouped by segment id, stable within a segment. Used for
/// deterministic scatter-add: each output row sums its inputs in row order.
struct SegmentIndex {
    std::size_t num_segments = 0;
    std::vector<std::size_t> offsets;  // num_segments + 1
    std::vector<std::uint32_t> rows;

    SegmentIndex() = default;
    SegmentIndex(std::span<const std::uint32_t> segment_of_row, std::size_t num_segments);
};

}  // namespace empcn::nn
