#include "empcn/nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "empcn/nn/kernels.hpp"

namespace empcn::nn {

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::string shape(const Matrix& m) { return std::to_string(m.rows) + "x" + std::to_string(m.cols); }

}  // namespace

const char* Tape::op_name(Op op) {
    switch (op) {
        case Op::Parameter: return "parameter";
        case Op::Constant: return "constant";
        case Op::Input: return "input";
        case Op::Dense: return "dense";
        case Op::Swish: return "swish";
        case Op::Sigmoid: return "sigmoid";
        case Op::Add: return "add";
        case Op::Sub: return "sub";
        case Op::Mul: return "mul";
        case Op::MulRows: return "mul_rows";
        case Op::Scale: return "scale";
        case Op::Abs: return "abs";
        case Op::SafeDiv: return "safe_div";
        case Op::Hcat: return "hcat";
        case Op::Gather: return "gather";
        case Op::SegmentSum: return "segment_sum";
        case Op::SegmentMean: return "segment_mean";
        case Op::SegmentMax: return "segment_max";
        case Op::RowNorm: return "row_norm";
        case Op::RowDot: return "row_dot";
        case Op::Cross3: return "cross3";
        case Op::Cross2: return "cross2";
        case Op::Sum: return "sum";
        case Op::Mean: return "mean";
    }
    return "?";
}

const Matrix& Tape::val(std::uint32_t id) const { return nodes_[id].value; }
const Matrix& Tape::value(Var v) const { return nodes_.at(v.id).value; }

const Matrix& Tape::grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    if (!n.grad.same_shape(n.value)) throw std::logic_error("no gradient recorded for this node");
    return n.grad;
}

Matrix& Tape::grad_buffer(std::uint32_t id) { return nodes_[id].grad; }

void Tape::check_same_shape(Var a, Var b, const char* op) const {
    if (!val(a.id).same_shape(val(b.id)))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape(val(a.id)) + " vs " + shape(val(b.id)));
}

void Tape::check_rows(Var a, Var b, const char* op) const {
    if (val(a.id).rows != val(b.id).rows) throw std::invalid_argument(std::string(op) + ": row count mismatch");
}

Var Tape::push(Node n) {
    if (n.op == Op::Parameter || n.op == Op::Input) n.needs_grad = true;
    for (auto i : n.in) n.needs_grad = n.needs_grad || nodes_[i].needs_grad;
    if (n.op != Op::Parameter && n.op != Op::Constant && n.op != Op::Input) compute(n, n.value, &n.argmax);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::compute(Node& n, Matrix& out, std::vector<std::uint32_t>* argmax) const {
    auto in = [&](std::size_t k) -> const Matrix& { return val(n.in[k]); };
    switch (n.op) {
        case Op::Parameter:
        case Op::Constant:
        case Op::Input: out = n.value; break;
        case Op::Dense:
            kernels::dense_forward(in(0), in(1), n.in.size() > 2 ? &in(2) : nullptr, out);
            break;
        case Op::Swish: kernels::swish_forward(in(0), out); break;
        case Op::Sigmoid:
            out = Matrix(in(0).rows, in(0).cols);
            for (std::size_t i = 0; i < out.size(); ++i) out.data[i] = logistic(in(0).data[i]);
            break;
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::SafeDiv: {
            const Matrix& a = in(0);
            const Matrix& b = in(1);
            out = Matrix(a.rows, a.cols);
            for (std::size_t i = 0; i < a.size(); ++i) {
                const double x = a.data[i], y = b.data[i];
                out.data[i] = n.op == Op::Add   ? x + y
                              : n.op == Op::Sub ? x - y
                              : n.op == Op::Mul ? x * y
                                                : (y != 0.0 ? x / y : 0.0);
            }
            break;
        }
        case Op::MulRows: {
            const Matrix& a = in(0);
            const Matrix& s = in(1);
            out = Matrix(a.rows, a.cols);
            for (std::size_t r = 0; r < a.rows; ++r)
                for (std::size_t c = 0; c < a.cols; ++c) out(r, c) = a(r, c) * s.data[r];
            break;
        }
        case Op::Scale:
            out = in(0);
            for (double& v : out.data) v *= n.scalar;
            break;
        case Op::Abs:
            out = in(0);
            for (double& v : out.data) v = std::abs(v);
            break;
        case Op::Hcat: {
            std::size_t cols = 0;
            for (std::size_t k = 0; k < n.in.size(); ++k) cols += in(k).cols;
            const std::size_t rows = in(0).rows;
            out = Matrix(rows, cols);
            std::size_t off = 0;
            for (std::size_t k = 0; k < n.in.size(); ++k) {
                const Matrix& p = in(k);
                for (std::size_t r = 0; r < rows; ++r)
                    std::copy(p.row(r), p.row(r) + p.cols, out.row(r) + off);
                off += p.cols;
            }
            break;
        }
        case Op::Gather: kernels::gather_rows(in(0), *n.index, out); break;
        case Op::SegmentSum: kernels::segment_sum(in(0), *n.segments, out); break;
        case Op::SegmentMean: {
            kernels::segment_sum(in(0), *n.segments, out);
            for (std::size_t s = 0; s < out.rows; ++s) {
                const auto cnt = n.segments->offsets[s + 1] - n.segments->offsets[s];
                if (cnt == 0) continue;
                for (std::size_t c = 0; c < out.cols; ++c) out(s, c) /= static_cast<double>(cnt);
            }
            break;
        }
        case Op::SegmentMax: {
            const Matrix& a = in(0);
            const SegmentIndex& seg = *n.segments;
            out = Matrix(seg.num_segments, a.cols);
            if (argmax) argmax->assign(seg.num_segments * a.cols, UINT32_MAX);
            for (std::size_t s = 0; s < seg.num_segments; ++s)
                for (std::size_t c = 0; c < a.cols; ++c) {
                    std::uint32_t best = UINT32_MAX;
                    for (std::size_t p = seg.offsets[s]; p < seg.offsets[s + 1]; ++p) {
                        const auto r = seg.rows[p];
                        if (best == UINT32_MAX || a(r, c) > a(best, c)) best = r;
                    }
                    out(s, c) = best == UINT32_MAX ? 0.0 : a(best, c);
                    if (argmax) (*argmax)[s * a.cols + c] = best;
                }
            break;
        }
        case Op::RowNorm: {
            const Matrix& a = in(0);
            out = Matrix(a.rows, 1);
            for (std::size_t r = 0; r < a.rows; ++r) {
                double s = 0.0;
                for (std::size_t c = 0; c < a.cols; ++c) s += a(r, c) * a(r, c);
                out.data[r] = std::sqrt(s);
            }
            break;
        }
        case Op::RowDot: {
            const Matrix& a = in(0);
            const Matrix& b = in(1);
            out = Matrix(a.rows, 1);
            for (std::size_t r = 0; r < a.rows; ++r) {
                double s = 0.0;
                for (std::size_t c = 0; c < a.cols; ++c) s += a(r, c) * b(r, c);
                out.data[r] = s;
            }
            break;
        }
        case Op::Cross3: {
            const Matrix& a = in(0);
            const Matrix& b = in(1);
            out = Matrix(a.rows, 3);
            for (std::size_t r = 0; r < a.rows; ++r) {
                out(r, 0) = a(r, 1) * b(r, 2) - a(r, 2) * b(r, 1);
                out(r, 1) = a(r, 2) * b(r, 0) - a(r, 0) * b(r, 2);
                out(r, 2) = a(r, 0) * b(r, 1) - a(r, 1) * b(r, 0);
            }
            break;
        }
        case Op::Cross2: {
            const Matrix& a = in(0);
            const Matrix& b = in(1);
            out = Matrix(a.rows, 1);
            for (std::size_t r = 0; r < a.rows; ++r) out.data[r] = a(r, 0) * b(r, 1) - a(r, 1) * b(r, 0);
            break;
        }
        case Op::Sum:
        case Op::Mean: {
            double s = 0.0;
            for (double v : in(0).data) s += v;
            if (n.op == Op::Mean && in(0).size() > 0) s /= static_cast<double>(in(0).size());
            out = Matrix(1, 1, s);
            break;
        }
    }
}

Var Tape::parameter(ParamId id) {
    if (!params_) throw std::logic_error("tape has no parameter store");
    Node n;
    n.op = Op::Parameter;
    n.param = id;
    n.value = (*params_)[id];
    return push(std::move(n));
}

Var Tape::constant(Matrix m) {
    Node n;
    n.op = Op::Constant;
    n.value = std::move(m);
    return push(std::move(n));
}

Var Tape::input(Matrix m) {
    Node n;
    n.op = Op::Input;
    n.value = std::move(m);
    return push(std::move(n));
}

Var Tape::dense(Var x, const DenseIds& ids) {
    if (!params_) throw std::logic_error("tape has no parameter store");
    const Matrix& w = (*params_)[ids.w];
    if (val(x.id).cols != w.cols) {
        std::ostringstream oss;
        oss << "dense \"" << params_->key(ids.w) << "\": input has " << val(x.id).cols << " columns, weight expects "
            << w.cols;
        throw std::invalid_argument(oss.str());
    }
    Node n;
    n.op = Op::Dense;
    n.dense = ids;
    n.in = {x.id, parameter(ids.w).id};
    if (ids.has_bias) n.in.push_back(parameter(ids.b).id);
    return push(std::move(n));
}

#define EMPCN_UNARY(name, OP)      \
    Var Tape::name(Var a) {        \
        Node n;                    \
        n.op = Op::OP;             \
        n.in = {a.id};             \
        return push(std::move(n)); \
    }
EMPCN_UNARY(swish, Swish)
EMPCN_UNARY(sigmoid, Sigmoid)
EMPCN_UNARY(abs, Abs)
EMPCN_UNARY(row_norm, RowNorm)
EMPCN_UNARY(sum, Sum)
EMPCN_UNARY(mean, Mean)
#undef EMPCN_UNARY

#define EMPCN_BINARY(name, OP, CHECK) \
    Var Tape::name(Var a, Var b) {    \
        CHECK(a, b, #name);           \
        Node n;                       \
        n.op = Op::OP;                \
        n.in = {a.id, b.id};          \
        return push(std::move(n));    \
    }
EMPCN_BINARY(add, Add, check_same_shape)
EMPCN_BINARY(sub, Sub, check_same_shape)
EMPCN_BINARY(mul, Mul, check_same_shape)
EMPCN_BINARY(safe_div, SafeDiv, check_same_shape)
EMPCN_BINARY(row_dot, RowDot, check_same_shape)
#undef EMPCN_BINARY

Var Tape::mul_rows(Var a, Var s) {
    check_rows(a, s, "mul_rows");
    if (val(s.id).cols != 1) throw std::invalid_argument("mul_rows: scale must be a column vector");
    Node n;
    n.op = Op::MulRows;
    n.in = {a.id, s.id};
    return push(std::move(n));
}

Var Tape::cross3(Var a, Var b) {
    check_same_shape(a, b, "cross3");
    if (val(a.id).cols != 3) throw std::invalid_argument("cross3 needs 3 columns");
    Node n;
    n.op = Op::Cross3;
    n.in = {a.id, b.id};
    return push(std::move(n));
}

Var Tape::cross2(Var a, Var b) {
    check_same_shape(a, b, "cross2");
    if (val(a.id).cols != 2) throw std::invalid_argument("cross2 needs 2 columns");
    Node n;
    n.op = Op::Cross2;
    n.in = {a.id, b.id};
    return push(std::move(n));
}

Var Tape::scale(Var a, double s) {
    Node n;
    n.op = Op::Scale;
    n.in = {a.id};
    n.scalar = s;
    return push(std::move(n));
}

Var Tape::hcat(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("hcat of nothing");
    Node n;
    n.op = Op::Hcat;
    for (const Var& p : parts) {
        check_rows(parts.front(), p, "hcat");
        n.in.push_back(p.id);
    }
    if (parts.size() == 1) return parts.front();
    return push(std::move(n));
}

Var Tape::gather(Var a, Index idx) {
    for (auto i : *idx)
        if (i >= val(a.id).rows) throw std::out_of_range("gather index out of range");
    Node n;
    n.op = Op::Gather;
    n.in = {a.id};
    n.index = std::move(idx);
    return push(std::move(n));
}

Var Tape::segment_sum(Var a, Index seg, std::size_t num_segments) {
    if (seg->size() != val(a.id).rows) throw std::invalid_argument("segment_sum: one segment id per row required");
    Node n;
    n.op = Op::SegmentSum;
    n.in = {a.id};
    n.segments = std::make_shared<const SegmentIndex>(*seg, num_segments);
    n.index = std::move(seg);
    return push(std::move(n));
}

Var Tape::segment_mean(Var a, Index seg, std::size_t num_segments) {
    Var s = segment_sum(a, std::move(seg), num_segments);
    nodes_[s.id].op = Op::SegmentMean;
    Node& node = nodes_[s.id];
    compute(node, node.value, nullptr);
    return s;
}

Var Tape::segment_max(Var a, Index seg, std::size_t num_segments) {
    Var s = segment_sum(a, std::move(seg), num_segments);
    Node& node = nodes_[s.id];
    node.op = Op::SegmentMax;
    compute(node, node.value, &node.argmax);
    return s;
}

void Tape::backward(Var loss) {
    const Matrix& lv = val(loss.id);
    if (lv.rows != 1 || lv.cols != 1)
        throw std::invalid_argument("backward: loss must be a scalar, got " + shape(lv));
    for (auto& n : nodes_)
        if (n.needs_grad) n.grad = Matrix(n.value.rows, n.value.cols);
    if (!nodes_[loss.id].needs_grad) return;
    nodes_[loss.id].grad.data[0] = 1.0;

    for (std::size_t i = loss.id + 1; i-- > 0;) {
        Node& n = nodes_[i];
        if (!n.needs_grad || n.in.empty()) continue;
        const Matrix& gy = n.grad;
        auto want = [&](std::size_t k) { return nodes_[n.in[k]].needs_grad; };
        auto g = [&](std::size_t k) -> Matrix& { return grad_buffer(n.in[k]); };
        auto x = [&](std::size_t k) -> const Matrix& { return val(n.in[k]); };
        switch (n.op) {
            case Op::Parameter:
            case Op::Constant:
            case Op::Input: break;
            case Op::Dense:
                if (want(0)) kernels::dense_backward_input(gy, x(1), g(0));
                kernels::dense_backward_params(gy, x(0), g(1), n.in.size() > 2 ? &g(2) : nullptr);
                break;
            case Op::Swish:
                if (want(0)) kernels::swish_backward(x(0), gy, g(0));
                break;
            case Op::Sigmoid:
                for (std::size_t k = 0; k < gy.size(); ++k) {
                    const double y = n.value.data[k];
                    g(0).data[k] += gy.data[k] * y * (1.0 - y);
                }
                break;
            case Op::Add:
                for (std::size_t k = 0; k < gy.size(); ++k) {
                    if (want(0)) g(0).data[k] += gy.data[k];
                    if (want(1)) g(1).data[k] += gy.data[k];
                }
                break;
            case Op::Sub:
                for (std::size_t k = 0; k < gy.size(); ++k) {
                    if (want(0)) g(0).data[k] += gy.data[k];
                    if (want(1)) g(1).data[k] -= gy.data[k];
                }
                break;
            case Op::Mul:
                for (std::size_t k = 0; k < gy.size(); ++k) {
                    if (want(0)) g(0).data[k] += gy.data[k] * x(1).data[k];
                    if (want(1)) g(1).data[k] += gy.data[k] * x(0).data[k];
                }
                break;
            case Op::SafeDiv:
                for (std::size_t k = 0; k < gy.size(); ++k) {
                    const double b = x(1).data[k];
                    if (b == 0.0) continue;
                    if (want(0)) g(0).data[k] += gy.data[k] / b;
                    if (want(1)) g(1).data[k] -= gy.data[k] * x(0).data[k] / (b * b);
                }
                break;
            case Op::MulRows: {
                const Matrix& a = x(0);
                const Matrix& s = x(1);
                for (std::size_t r = 0; r < a.rows; ++r) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < a.cols; ++c) {
                        if (want(0)) g(0)(r, c) += gy(r, c) * s.data[r];
                        acc += gy(r, c) * a(r, c);
                    }
                    if (want(1)) g(1).data[r] += acc;
                }
                break;
            }
            case Op::Scale:
                for (std::size_t k = 0; k < gy.size(); ++k) g(0).data[k] += n.scalar * gy.data[k];
                break;
            case Op::Abs:
                for (std::size_t k = 0; k < gy.size(); ++k) {
                    const double v = x(0).data[k];
                    g(0).data[k] += v > 0.0 ? gy.data[k] : (v < 0.0 ? -gy.data[k] : 0.0);
                }
                break;
            case Op::Hcat: {
                std::size_t off = 0;
                for (std::size_t k = 0; k < n.in.size(); ++k) {
                    const std::size_t w = x(k).cols;
                    if (want(k))
                        for (std::size_t r = 0; r < gy.rows; ++r)
                            for (std::size_t c = 0; c < w; ++c) g(k)(r, c) += gy(r, off + c);
                    off += w;
                }
                break;
            }
            case Op::Gather: {
                const SegmentIndex seg(*n.index, x(0).rows);
                Matrix acc;
                kernels::segment_sum(gy, seg, acc);
                for (std::size_t k = 0; k < acc.size(); ++k) g(0).data[k] += acc.data[k];
                break;
            }
            case Op::SegmentSum:
            case Op::SegmentMean: {
                const auto& seg = *n.index;
                for (std::size_t r = 0; r < seg.size(); ++r) {
                    double f = 1.0;
                    if (n.op == Op::SegmentMean)
                        f = 1.0 / static_cast<double>(n.segments->offsets[seg[r] + 1] - n.segments->offsets[seg[r]]);
                    for (std::size_t c = 0; c < gy.cols; ++c) g(0)(r, c) += f * gy(seg[r], c);
                }
                break;
            }
            case Op::SegmentMax:
                for (std::size_t s = 0; s < gy.rows; ++s)
                    for (std::size_t c = 0; c < gy.cols; ++c) {
                        const auto r = n.argmax[s * gy.cols + c];
                        if (r != UINT32_MAX) g(0)(r, c) += gy(s, c);
                    }
                break;
            case Op::RowNorm:
                for (std::size_t r = 0; r < gy.rows; ++r) {
                    const double len = n.value.data[r];
                    if (len == 0.0) continue;
                    for (std::size_t c = 0; c < x(0).cols; ++c) g(0)(r, c) += gy.data[r] * x(0)(r, c) / len;
                }
                break;
            case Op::RowDot:
                for (std::size_t r = 0; r < gy.rows; ++r)
                    for (std::size_t c = 0; c < x(0).cols; ++c) {
                        if (want(0)) g(0)(r, c) += gy.data[r] * x(1)(r, c);
                        if (want(1)) g(1)(r, c) += gy.data[r] * x(0)(r, c);
                    }
                break;
            case Op::Cross3: {
                const Matrix& a = x(0);
                const Matrix& b = x(1);
                for (std::size_t r = 0; r < gy.rows; ++r) {
                    const double g0 = gy(r, 0), g1 = gy(r, 1), g2 = gy(r, 2);
                    if (want(0)) {  // b × g
                        g(0)(r, 0) += b(r, 1) * g2 - b(r, 2) * g1;
                        g(0)(r, 1) += b(r, 2) * g0 - b(r, 0) * g2;
                        g(0)(r, 2) += b(r, 0) * g1 - b(r, 1) * g0;
                    }
                    if (want(1)) {  // g × a
                        g(1)(r, 0) += g1 * a(r, 2) - g2 * a(r, 1);
                        g(1)(r, 1) += g2 * a(r, 0) - g0 * a(r, 2);
                        g(1)(r, 2) += g0 * a(r, 1) - g1 * a(r, 0);
                    }
                }
                break;
            }
            case Op::Cross2: {
                const Matrix& a = x(0);
                const Matrix& b = x(1);
                for (std::size_t r = 0; r < gy.rows; ++r) {
                    const double gv = gy.data[r];
                    if (want(0)) {
                        g(0)(r, 0) += gv * b(r, 1);
                        g(0)(r, 1) -= gv * b(r, 0);
                    }
                    if (want(1)) {
                        g(1)(r, 0) -= gv * a(r, 1);
                        g(1)(r, 1) += gv * a(r, 0);
                    }
                }
                break;
            }
            case Op::Sum:
            case Op::Mean: {
                double f = gy.data[0];
                if (n.op == Op::Mean && x(0).size() > 0) f /= static_cast<double>(x(0).size());
                for (double& v : g(0).data) v += f;
                break;
            }
        }
    }
}

void Tape::accumulate_param_grads(Gradients& g) const {
    for (const Node& n : nodes_) {
        if (n.op != Op::Parameter || !n.grad.same_shape(n.value)) continue;
        Matrix& dst = g.blocks.at(n.param);
        for (std::size_t k = 0; k < dst.size(); ++k) dst.data[k] += n.grad.data[k];
    }
}

bool Tape::replay_matches() const {
    for (const Node& n : nodes_) {
        Matrix out;
        std::vector<std::uint32_t> argmax;
        Node copy = n;
        compute(copy, out, &argmax);
        if (!(out == n.value)) return false;
        if (n.op == Op::SegmentMax && argmax != n.argmax) return false;
    }
    return true;
}

std::optional<std::string> Tape::first_nonfinite() const {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const Node& n = nodes_[i];
        const bool bad = std::any_of(n.value.data.begin(), n.value.data.end(), [](double v) { return !std::isfinite(v); });
        if (!bad) continue;
        std::ostringstream oss;
        oss << op_name(n.op) << " node " << i;
        if (n.op == Op::Dense && params_) oss << " (" << params_->key(n.dense.w) << ")";
        if (n.op == Op::Parameter && params_) oss << " (" << params_->key(n.param) << ")";
        return oss.str();
    }
    return std::nullopt;
}

}  // namespace empcn::nn
