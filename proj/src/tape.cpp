#include "a4nt/tape.hpp"

#include <Eigen/Core>
#include <cmath>
#include <string>

namespace a4nt {

namespace {

using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<Mat>;
using CMapM = Eigen::Map<const Mat>;
using MapA = Eigen::Map<Eigen::Array<Real, Eigen::Dynamic, 1>>;
using CMapA = Eigen::Map<const Eigen::Array<Real, Eigen::Dynamic, 1>>;

MapM mat(Tensor& t) { return MapM(t.data(), Eigen::Index(t.rows()), Eigen::Index(t.cols())); }
CMapM mat(const Tensor& t) { return CMapM(t.data(), Eigen::Index(t.rows()), Eigen::Index(t.cols())); }
MapA arr(Tensor& t) { return MapA(t.data(), Eigen::Index(t.size())); }
CMapA arr(const Tensor& t) { return CMapA(t.data(), Eigen::Index(t.size())); }

Tensor like(const Tensor& t) { return Tensor::matrix(t.rows(), t.cols()); }

[[noreturn]] void shape_fail(const char* op, const Tensor& a, const Tensor& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()));
}

enum BinaryKind { kAdd = 0, kSub = 1, kMul = 2 };

}  // namespace

const Tape::Node& Tape::node(Var v, const char* op) const {
    if (v.tape != this || v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size())
        throw std::invalid_argument(std::string(op) + ": variable is not recorded on this tape");
    return nodes_[static_cast<std::size_t>(v.id)];
}

Var Tape::push(Tensor value, bool requires_grad, BackwardFn fn) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    if (requires_grad) n.backward = std::move(fn);
    nodes_.push_back(std::move(n));
    return Var{this, static_cast<int>(nodes_.size() - 1)};
}

Tensor& Tape::grad_ref(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.empty()) n.grad = Tensor(n.value.shape());
    return n.grad;
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::param(Parameter& p, bool trainable) {
    Var v = push(p.value, trainable, nullptr);
    if (trainable) nodes_.back().param = &p;
    return v;
}

const Tensor& Tape::value(Var v) const { return node(v, "value").value; }
const Tensor& Tape::grad(Var v) const { return node(v, "grad").grad; }
bool Tape::requires_grad(Var v) const { return node(v, "requires_grad").requires_grad; }

Var Tape::matmul(Var a, Var b) {
    const Tensor& av = node(a, "matmul").value;
    const Tensor& bv = node(b, "matmul").value;
    if (av.cols() != bv.rows()) shape_fail("matmul", av, bv);
    Tensor out = Tensor::matrix(av.rows(), bv.cols());
    mat(out).noalias() = mat(av) * mat(bv);
    const int ia = a.id, ib = b.id;
    return push(std::move(out), needs(ia) || needs(ib), [ia, ib](Tape& t, int self) {
        const Tensor& dy = t.nodes_[std::size_t(self)].grad;
        if (t.needs(ia)) mat(t.grad_ref(ia)).noalias() += mat(dy) * mat(t.val(ib)).transpose();
        if (t.needs(ib)) mat(t.grad_ref(ib)).noalias() += mat(t.val(ia)).transpose() * mat(dy);
    });
}

Tape::Broadcast Tape::broadcast_kind(const char* op, const Tensor& a, const Tensor& b) const {
    if (a.rank() > 2 || b.rank() > 2) shape_fail(op, a, b);
    if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::Same;
    if (b.rows() == 1 && b.cols() == 1) return Broadcast::Scalar;
    if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::Row;
    if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::Col;
    shape_fail(op, a, b);
}

Var Tape::binary(const char* op, Var a, Var b, int kind) {
    const Tensor& av = node(a, op).value;
    const Tensor& bv = node(b, op).value;
    const Broadcast bc = broadcast_kind(op, av, bv);
    const std::size_t m = av.rows(), n = av.cols();
    Tensor out = Tensor::matrix(m, n);
    auto expand = [&](const Tensor& src) -> Mat {
        switch (bc) {
            case Broadcast::Same: return mat(src);
            case Broadcast::Row: return mat(src).replicate(Eigen::Index(m), 1);
            case Broadcast::Col: return mat(src).replicate(1, Eigen::Index(n));
            case Broadcast::Scalar: return Mat::Constant(Eigen::Index(m), Eigen::Index(n), src[0]);
        }
        return {};
    };
    if (bc == Broadcast::Same) {
        switch (kind) {
            case kAdd: arr(out) = arr(av) + arr(bv); break;
            case kSub: arr(out) = arr(av) - arr(bv); break;
            default: arr(out) = arr(av) * arr(bv); break;
        }
    } else {
        const Mat be = expand(bv);
        switch (kind) {
            case kAdd: mat(out) = mat(av) + be; break;
            case kSub: mat(out) = mat(av) - be; break;
            default: mat(out) = (mat(av).array() * be.array()).matrix(); break;
        }
    }
    const int ia = a.id, ib = b.id;
    return push(std::move(out), needs(ia) || needs(ib), [ia, ib, bc, kind](Tape& t, int self) {
        const Tensor& dy = t.nodes_[std::size_t(self)].grad;
        const std::size_t rows = dy.rows(), cols = dy.cols();
        if (t.needs(ia)) {
            Tensor& ga = t.grad_ref(ia);
            if (kind == kMul) {
                const Tensor& bv = t.val(ib);
                switch (bc) {
                    case Broadcast::Same: arr(ga) += arr(dy) * arr(bv); break;
                    case Broadcast::Row:
                        mat(ga).array() += mat(dy).array() * mat(bv).replicate(Eigen::Index(rows), 1).array();
                        break;
                    case Broadcast::Col:
                        mat(ga).array() += mat(dy).array() * mat(bv).replicate(1, Eigen::Index(cols)).array();
                        break;
                    case Broadcast::Scalar: arr(ga) += arr(dy) * bv[0]; break;
                }
            } else {
                arr(ga) += arr(dy);
            }
        }
        if (t.needs(ib)) {
            Tensor& gb = t.grad_ref(ib);
            Mat contrib;
            if (kind == kMul) {
                const Tensor& av = t.val(ia);
                contrib = (mat(dy).array() * mat(av).array()).matrix();
            } else {
                contrib = mat(dy);
                if (kind == kSub) contrib = -contrib;
            }
            switch (bc) {
                case Broadcast::Same: mat(gb) += contrib; break;
                case Broadcast::Row: mat(gb) += contrib.colwise().sum(); break;
                case Broadcast::Col: mat(gb) += contrib.rowwise().sum(); break;
                case Broadcast::Scalar: gb[0] += contrib.sum(); break;
            }
        }
    });
}

Var Tape::add(Var a, Var b) { return binary("add", a, b, kAdd); }
Var Tape::sub(Var a, Var b) { return binary("sub", a, b, kSub); }
Var Tape::mul(Var a, Var b) { return binary("mul", a, b, kMul); }

Var Tape::scale(Var a, Real k) {
    const Tensor& av = node(a, "scale").value;
    Tensor out = like(av);
    arr(out) = arr(av) * k;
    const int ia = a.id;
    return push(std::move(out), needs(ia), [ia, k](Tape& t, int self) {
        arr(t.grad_ref(ia)) += arr(t.nodes_[std::size_t(self)].grad) * k;
    });
}

Var Tape::add_scalar(Var a, Real k) {
    const Tensor& av = node(a, "add_scalar").value;
    Tensor out = like(av);
    arr(out) = arr(av) + k;
    const int ia = a.id;
    return push(std::move(out), needs(ia), [ia](Tape& t, int self) {
        arr(t.grad_ref(ia)) += arr(t.nodes_[std::size_t(self)].grad);
    });
}

Var Tape::tanh(Var a) {
    const Tensor& av = node(a, "tanh").value;
    Tensor out = like(av);
    arr(out) = arr(av).tanh();
    const int ia = a.id;
    return push(std::move(out), needs(ia), [ia](Tape& t, int self) {
        const Node& n = t.nodes_[std::size_t(self)];
        arr(t.grad_ref(ia)) += arr(n.grad) * (Real(1) - arr(n.value).square());
    });
}

Var Tape::sigmoid(Var a) {
    const Tensor& av = node(a, "sigmoid").value;
    Tensor out = like(av);
    arr(out) = Real(1) / (Real(1) + (-arr(av)).exp());
    const int ia = a.id;
    return push(std::move(out), needs(ia), [ia](Tape& t, int self) {
        const Node& n = t.nodes_[std::size_t(self)];
        arr(t.grad_ref(ia)) += arr(n.grad) * arr(n.value) * (Real(1) - arr(n.value));
    });
}

Var Tape::exp(Var a) {
    const Tensor& av = node(a, "exp").value;
    Tensor out = like(av);
    arr(out) = arr(av).exp();
    const int ia = a.id;
    return push(std::move(out), needs(ia), [ia](Tape& t, int self) {
        const Node& n = t.nodes_[std::size_t(self)];
        arr(t.grad_ref(ia)) += arr(n.grad) * arr(n.value);
    });
}

Var Tape::log(Var a) {
    const Tensor& av = node(a, "log").value;
    Tensor out = like(av);
    arr(out) = arr(av).log();
    const int ia = a.id;
    return push(std::move(out), needs(ia), [ia](Tape& t, int self) {
        arr(t.grad_ref(ia)) += arr(t.nodes_[std::size_t(self)].grad) / arr(t.val(ia));
    });
}

Var Tape::clamp(Var a, Real lo, Real hi) {
    const Tensor& av = node(a, "clamp").value;
    if (!(lo <= hi)) throw std::invalid_argument("clamp: lower bound exceeds upper bound");
    Tensor out = like(av);
    arr(out) = arr(av).max(lo).min(hi);
    const int ia = a.id;
    return push(std::move(out), needs(ia), [ia, lo, hi](Tape& t, int self) {
        const CMapA x = arr(t.val(ia));
        arr(t.grad_ref(ia)) +=
            (x >= lo && x <= hi).select(arr(t.nodes_[std::size_t(self)].grad), Real(0));
    });
}

Var Tape::abs_diff(Var a, Var b) {
    const Tensor& av = node(a, "abs_diff").value;
    const Tensor& bv = node(b, "abs_diff").value;
    if (av.rows() != bv.rows() || av.cols() != bv.cols())
        shape_fail("abs_diff", av, bv);
    Tensor out = like(av);
    arr(out) = (arr(av) - arr(bv)).abs();
    const int ia = a.id, ib = b.id;
    return push(std::move(out), needs(ia) || needs(ib), [ia, ib](Tape& t, int self) {
        const Tensor& dy = t.nodes_[std::size_t(self)].grad;
        const Eigen::Array<Real, Eigen::Dynamic, 1> s = (arr(t.val(ia)) - arr(t.val(ib))).sign();
        if (t.needs(ia)) arr(t.grad_ref(ia)) += arr(dy) * s;
        if (t.needs(ib)) arr(t.grad_ref(ib)) -= arr(dy) * s;
    });
}

Var Tape::softmax(Var a) {
    const Tensor& av = node(a, "softmax").value;
    Tensor out = like(av);
    auto y = mat(out);
    y = mat(av).colwise() - mat(av).rowwise().maxCoeff();
    y = y.array().exp().matrix();
    y.array().colwise() /= y.rowwise().sum().array();
    const int ia = a.id;
    return push(std::move(out), needs(ia), [ia](Tape& t, int self) {
        const Node& n = t.nodes_[std::size_t(self)];
        const auto yv = mat(n.value);
        const auto dy = mat(n.grad);
        const Eigen::Matrix<Real, Eigen::Dynamic, 1> dot = (dy.array() * yv.array()).rowwise().sum();
        mat(t.grad_ref(ia)).array() += yv.array() * (dy.colwise() - dot).array();
    });
}

Var Tape::log_softmax(Var a) {
    const Tensor& av = node(a, "log_softmax").value;
    Tensor out = like(av);
    auto y = mat(out);
    y = mat(av).colwise() - mat(av).rowwise().maxCoeff();
    const Eigen::Matrix<Real, Eigen::Dynamic, 1> lse = y.array().exp().rowwise().sum().log();
    y.colwise() -= lse;
    const int ia = a.id;
    return push(std::move(out), needs(ia), [ia](Tape& t, int self) {
        const Node& n = t.nodes_[std::size_t(self)];
        const auto dy = mat(n.grad);
        const Eigen::Matrix<Real, Eigen::Dynamic, 1> total = dy.rowwise().sum();
        mat(t.grad_ref(ia)).array() += dy.array() - mat(n.value).array().exp().colwise() * total.array();
    });
}

Var Tape::concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
    const std::size_t m = node(parts[0], "concat_cols").value.rows();
    std::size_t n = 0;
    bool rg = false;
    std::vector<int> ids;
    std::vector<std::size_t> offsets;
    for (Var p : parts) {
        const Tensor& pv = node(p, "concat_cols").value;
        if (pv.rows() != m) shape_fail("concat_cols", node(parts[0], "concat_cols").value, pv);
        ids.push_back(p.id);
        offsets.push_back(n);
        n += pv.cols();
        rg = rg || needs(p.id);
    }
    Tensor out = Tensor::matrix(m, n);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const Tensor& pv = val(ids[i]);
        mat(out).middleCols(Eigen::Index(offsets[i]), Eigen::Index(pv.cols())) = mat(pv);
    }
    return push(std::move(out), rg, [ids, offsets](Tape& t, int self) {
        const Tensor& dy = t.nodes_[std::size_t(self)].grad;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (!t.needs(ids[i])) continue;
            Tensor& g = t.grad_ref(ids[i]);
            mat(g) += mat(dy).middleCols(Eigen::Index(offsets[i]), Eigen::Index(g.cols()));
        }
    });
}

Var Tape::slice_cols(Var a, std::size_t begin, std::size_t end) {
    const Tensor& av = node(a, "slice_cols").value;
    if (begin >= end || end > av.cols())
        throw ShapeError("slice_cols: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") outside " + shape_to_string(av.shape()));
    Tensor out = Tensor::matrix(av.rows(), end - begin);
    mat(out) = mat(av).middleCols(Eigen::Index(begin), Eigen::Index(end - begin));
    const int ia = a.id;
    return push(std::move(out), needs(ia), [ia, begin](Tape& t, int self) {
        const Tensor& dy = t.nodes_[std::size_t(self)].grad;
        mat(t.grad_ref(ia)).middleCols(Eigen::Index(begin), Eigen::Index(dy.cols())) += mat(dy);
    });
}

Var Tape::slice_rows(Var a, std::size_t begin, std::size_t end) {
    const Tensor& av = node(a, "slice_rows").value;
    if (begin >= end || end > av.rows())
        throw ShapeError("slice_rows: range [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") outside " + shape_to_string(av.shape()));
    Tensor out = Tensor::matrix(end - begin, av.cols());
    mat(out) = mat(av).middleRows(Eigen::Index(begin), Eigen::Index(end - begin));
    const int ia = a.id;
    return push(std::move(out), needs(ia), [ia, begin](Tape& t, int self) {
        const Tensor& dy = t.nodes_[std::size_t(self)].grad;
        mat(t.grad_ref(ia)).middleRows(Eigen::Index(begin), Eigen::Index(dy.rows())) += mat(dy);
    });
}

Var Tape::sum(Var a) {
    const Tensor& av = node(a, "sum").value;
    Tensor out = Tensor::scalar(arr(av).sum());
    const int ia = a.id;
    return push(std::move(out), needs(ia), [ia](Tape& t, int self) {
        arr(t.grad_ref(ia)) += t.nodes_[std::size_t(self)].grad[0];
    });
}

Var Tape::mean(Var a) {
    const std::size_t count = node(a, "mean").value.size();
    return scale(sum(a), Real(1) / Real(count));
}

Var Tape::sum_rows(Var a) {
    const Tensor& av = node(a, "sum_rows").value;
    Tensor out = Tensor::matrix(1, av.cols());
    mat(out) = mat(av).colwise().sum();
    const int ia = a.id;
    return push(std::move(out), needs(ia), [ia](Tape& t, int self) {
        Tensor& g = t.grad_ref(ia);
        mat(g).rowwise() += mat(t.nodes_[std::size_t(self)].grad).row(0);
    });
}

Var Tape::mean_rows(Var a) {
    const std::size_t m = node(a, "mean_rows").value.rows();
    return scale(sum_rows(a), Real(1) / Real(m));
}

Var Tape::sum_cols(Var a) {
    const Tensor& av = node(a, "sum_cols").value;
    Tensor out = Tensor::matrix(av.rows(), 1);
    mat(out) = mat(av).rowwise().sum();
    const int ia = a.id;
    return push(std::move(out), needs(ia), [ia](Tape& t, int self) {
        Tensor& g = t.grad_ref(ia);
        mat(g).colwise() += mat(t.nodes_[std::size_t(self)].grad).col(0);
    });
}

Var Tape::gather_rows(Var table, std::vector<int> ids) {
    const Tensor& tv = node(table, "gather_rows").value;
    const std::size_t n = tv.cols();
    Tensor out = Tensor::matrix(ids.size(), n);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || std::size_t(ids[i]) >= tv.rows())
            throw ShapeError("gather_rows: index " + std::to_string(ids[i]) + " outside table " +
                             shape_to_string(tv.shape()));
        mat(out).row(Eigen::Index(i)) = mat(tv).row(ids[i]);
    }
    const int it = table.id;
    return push(std::move(out), needs(it), [it, ids = std::move(ids)](Tape& t, int self) {
        const Tensor& dy = t.nodes_[std::size_t(self)].grad;
        auto g = mat(t.grad_ref(it));
        for (std::size_t i = 0; i < ids.size(); ++i) g.row(ids[i]) += mat(dy).row(Eigen::Index(i));
    });
}

Var Tape::pick(Var a, std::vector<int> cols) {
    const Tensor& av = node(a, "pick").value;
    if (cols.size() != av.rows())
        throw ShapeError("pick: " + std::to_string(cols.size()) + " indices for " +
                         shape_to_string(av.shape()));
    Tensor out = Tensor::matrix(av.rows(), 1);
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (cols[i] < 0 || std::size_t(cols[i]) >= av.cols())
            throw ShapeError("pick: column " + std::to_string(cols[i]) + " outside " +
                             shape_to_string(av.shape()));
        out[i] = av.at(i, std::size_t(cols[i]));
    }
    const int ia = a.id;
    return push(std::move(out), needs(ia), [ia, cols = std::move(cols)](Tape& t, int self) {
        const Tensor& dy = t.nodes_[std::size_t(self)].grad;
        Tensor& g = t.grad_ref(ia);
        for (std::size_t i = 0; i < cols.size(); ++i) g.at(i, std::size_t(cols[i])) += dy[i];
    });
}

void Tape::backward(Var loss) {
    const Node& root = node(loss, "backward");
    if (root.value.size() != 1)
        throw std::invalid_argument("backward: loss must be a scalar, got shape " +
                                    shape_to_string(root.value.shape()));
    for (Node& n : nodes_) n.grad = Tensor();
    if (!root.requires_grad) return;
    grad_ref(loss.id)[0] = Real(1);
    for (int i = loss.id; i >= 0; --i) {
        Node& n = nodes_[std::size_t(i)];
        if (!n.requires_grad || n.grad.empty()) continue;
        if (n.backward) n.backward(*this, i);
        if (n.param != nullptr) {
            if (!n.param->grad.same_shape(n.param->value)) n.param->grad = Tensor(n.param->value.shape());
            arr(n.param->grad) += arr(n.grad);
        }
    }
}

}  // namespace a4nt
