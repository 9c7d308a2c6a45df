#pragma once

#include <functional>
#include <span>
#include <vector>

#include "a4nt/tensor.hpp"

namespace a4nt {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
    const Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
};

/// Reverse-mode differentiation tape over 2-D tensors.
///
/// Every primitive appends one node whose inputs were recorded earlier, so
/// the node vector is already in topological order and backward() is a
/// single reverse sweep. Parameters enter as leaves; after backward() the
/// derivative of the loss is added into Parameter::grad for every trainable
/// leaf. Parameters must outlive the backward pass.
///
/// Binary arithmetic accepts a right operand of identical shape, a single
/// row [1,n], a single column [m,1], or a scalar [1,1].
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    Var param(Parameter& p, bool trainable = true);

    const Tensor& value(Var v) const;
    /// Gradient accumulated at v by the last backward(); empty when v does
    /// not depend on any trainable leaf.
    const Tensor& grad(Var v) const;
    bool requires_grad(Var v) const;
    std::size_t size() const { return nodes_.size(); }

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var mul(Var a, Var b);
    Var scale(Var a, Real k);
    Var add_scalar(Var a, Real k);
    Var neg(Var a) { return scale(a, Real(-1)); }

    Var tanh(Var a);
    Var sigmoid(Var a);
    Var exp(Var a);
    Var log(Var a);
    Var clamp(Var a, Real lo, Real hi);
    Var abs_diff(Var a, Var b);

    Var softmax(Var a);
    Var log_softmax(Var a);

    Var concat_cols(std::span<const Var> parts);
    Var slice_cols(Var a, std::size_t begin, std::size_t end);
    Var slice_rows(Var a, std::size_t begin, std::size_t end);

    Var sum(Var a);
    Var mean(Var a);
    /// Reduces over rows: [m,n] -> [1,n].
    Var sum_rows(Var a);
    Var mean_rows(Var a);
    /// Reduces over columns: [m,n] -> [m,1].
    Var sum_cols(Var a);

    /// Embedding lookup: row ids[i] of table becomes output row i.
    Var gather_rows(Var table, std::vector<int> ids);
    /// Selects a[i, cols[i]] for every row: [m,n] -> [m,1].
    Var pick(Var a, std::vector<int> cols);
    /// Distribution-weighted sum of table rows: [m,k] x [k,n] -> [m,n].
    Var weighted_rows(Var weights, Var table) { return matmul(weights, table); }

    void backward(Var loss);

private:
    using BackwardFn = std::function<void(Tape&, int self)>;

    struct Node {
        Tensor value;
        Tensor grad;
        bool requires_grad = false;
        Parameter* param = nullptr;
        BackwardFn backward;
    };

    const Node& node(Var v, const char* op) const;
    Var push(Tensor value, bool requires_grad, BackwardFn fn);
    Tensor& grad_ref(int id);
    bool needs(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
    const Tensor& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

    enum class Broadcast { Same, Row, Col, Scalar };
    Broadcast broadcast_kind(const char* op, const Tensor& a, const Tensor& b) const;
    Var binary(const char* op, Var a, Var b, int kind);

    std::vector<Node> nodes_;
};

}  // namespace a4nt
