#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "empcn/nn/matrix.hpp"
#include "empcn/nn/params.hpp"

namespace empcn::nn {

struct Var {
    std::uint32_t id = 0;
};

using Index = std::shared_ptr<const std::vector<std::uint32_t>>;

inline Index make_index(std::vector<std::uint32_t> v) {
    return std::make_shared<const std::vector<std::uint32_t>>(std::move(v));
}

/// Records matrix-valued operations for reverse-mode differentiation.
///
/// Every node keeps its forward value. `backward` walks the nodes in exact
/// reverse order and accumulates gradients; parameter gradients are then
/// collected with `accumulate_param_grads`. Row-indexed operations (gather,
/// segment reductions) take shared index arrays so batches of cells can be
/// processed as single matrices.
class Tape {
public:
    explicit Tape(const Params* params = nullptr) : params_(params) {}

    Var parameter(ParamId id);
    Var constant(Matrix m);
    /// Differentiable input (e.g. positions).
    Var input(Matrix m);

    Var dense(Var x, const DenseIds& ids);
    Var swish(Var x);
    Var sigmoid(Var x);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    /// a (n×c) times s (n×1), broadcast across columns.
    Var mul_rows(Var a, Var s);
    Var scale(Var a, double s);
    Var abs(Var a);
    /// a / b elementwise; zero where b == 0.
    Var safe_div(Var a, Var b);
    Var hcat(const std::vector<Var>& parts);
    Var gather(Var a, Index idx);
    Var segment_sum(Var a, Index segment_of_row, std::size_t num_segments);
    Var segment_mean(Var a, Index segment_of_row, std::size_t num_segments);
    /// Column-wise max per segment; empty segments give 0.
    Var segment_max(Var a, Index segment_of_row, std::size_t num_segments);
    /// Euclidean norm of each row (n×1); gradient taken as 0 at the origin.
    Var row_norm(Var a);
    Var row_dot(Var a, Var b);
    Var cross3(Var a, Var b);
    /// z-component of the 2D cross product (n×1).
    Var cross2(Var a, Var b);
    Var sum(Var a);   // 1×1
    Var mean(Var a);  // 1×1

    const Matrix& value(Var v) const;
    const Matrix& grad(Var v) const;
    std::size_t size() const { return nodes_.size(); }

    /// Seeds d(loss)/d(loss) = 1. `loss` must be 1×1.
    void backward(Var loss);
    void accumulate_param_grads(Gradients& g) const;

    /// Recomputes every node from its recorded inputs and reports whether
    /// each value is bit-identical to the recorded one.
    bool replay_matches() const;

    /// Describes the first node whose value is non-finite, naming the
    /// parameter key for dense nodes.
    std::optional<std::string> first_nonfinite() const;

private:
    enum class Op {
        Parameter, Constant, Input, Dense, Swish, Sigmoid, Add, Sub, Mul, MulRows, Scale, Abs, SafeDiv,
        Hcat, Gather, SegmentSum, SegmentMean, SegmentMax, RowNorm, RowDot, Cross3, Cross2, Sum, Mean
    };
    static const char* op_name(Op op);

    struct Node {
        Op op = Op::Constant;
        std::vector<std::uint32_t> in;
        Matrix value;
        Matrix grad;
        bool needs_grad = false;
        ParamId param = 0;
        DenseIds dense{};
        double scalar = 0.0;
        Index index;
        std::shared_ptr<const SegmentIndex> segments;
        std::vector<std::uint32_t> argmax;
    };

    Var push(Node n);
    void compute(Node& n, Matrix& out, std::vector<std::uint32_t>* argmax) const;
    const Matrix& val(std::uint32_t id) const;
    Matrix& grad_buffer(std::uint32_t id);
    void check_same_shape(Var a, Var b, const char* op) const;
    void check_rows(Var a, Var b, const char* op) const;

    const Params* params_;
    std::vector<Node> nodes_;
};

}  // namespace empcn::nn
