#include "volcast/autodiff.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace volcast {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using CMatMap = Eigen::Map<const RowMat>;

[[noreturn]] void shape_error(const std::string& op, const std::vector<int>& a,
                              const std::vector<int>& b) {
    throw std::invalid_argument(op + ": incompatible shapes " + shape_to_string(a) +
                                " and " + shape_to_string(b));
}

[[noreturn]] void shape_error(const std::string& op, const std::vector<int>& a) {
    throw std::invalid_argument(op + ": unsupported shape " + shape_to_string(a));
}

}  // namespace

std::int64_t shape_numel(const std::vector<int>& shape) {
    std::int64_t n = 1;
    for (int d : shape) {
        if (d < 0) throw std::invalid_argument("negative dimension in shape");
        n *= d;
    }
    return n;
}

std::string shape_to_string(const std::vector<int>& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    Tensor t;
    t.shape = std::move(shape);
    t.values = Eigen::ArrayXd::Zero(shape_numel(t.shape));
    t.requires_grad = requires_grad;
    if (requires_grad) t.grad = Eigen::ArrayXd::Zero(t.values.size());
    return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values,
                    bool requires_grad) {
    Tensor t = zeros(std::move(shape), requires_grad);
    if (static_cast<std::int64_t>(values.size()) != t.numel())
        throw std::invalid_argument("tensor data length " + std::to_string(values.size()) +
                                    " does not match shape " + shape_to_string(t.shape));
    for (std::int64_t i = 0; i < t.numel(); ++i) t.values[i] = values[static_cast<std::size_t>(i)];
    return t;
}

Tensor Tensor::scalar(double v) {
    Tensor t = zeros({});
    t.values[0] = v;
    return t;
}

// ---------------------------------------------------------------------------

void Graph::check_id(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        throw std::invalid_argument("unknown graph node id " + std::to_string(id));
}

const Graph::Node& Graph::at(int id) const {
    check_id(id);
    return nodes_[static_cast<std::size_t>(id)];
}

Graph::Node& Graph::at(int id) {
    check_id(id);
    return nodes_[static_cast<std::size_t>(id)];
}

int Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Graph::input(std::vector<int> shape) {
    Node n;
    n.op = Op::input;
    n.out = Tensor::zeros(std::move(shape));
    return push(std::move(n));
}

int Graph::param(Tensor* t) {
    if (t == nullptr) throw std::invalid_argument("param: null tensor");
    if (t->requires_grad && t->grad.size() != t->values.size())
        throw std::invalid_argument("param: gradient buffer does not match values");
    Node n;
    n.op = Op::param;
    n.external = t;
    n.out = Tensor::zeros(t->shape);
    return push(std::move(n));
}

void Graph::set_input(int id, const std::vector<double>& values) {
    Eigen::ArrayXd v(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
    set_input(id, v);
}

void Graph::set_input(int id, const Eigen::ArrayXd& values) {
    Node& n = at(id);
    if (n.op != Op::input)
        throw std::invalid_argument("set_input: node " + std::to_string(id) +
                                    " is not an input");
    if (values.size() != n.out.values.size())
        throw std::invalid_argument("set_input: expected " +
                                    std::to_string(n.out.values.size()) + " values, got " +
                                    std::to_string(values.size()));
    n.out.values = values;
    n.filled = true;
}

void Graph::set_gather_indices(int id, std::vector<int> rows) {
    Node& n = at(id);
    if (n.op != Op::gather_rows)
        throw std::invalid_argument("set_gather_indices: node is not gather_rows");
    if (rows.size() != n.indices.size())
        throw std::invalid_argument("set_gather_indices: index count is fixed at " +
                                    std::to_string(n.indices.size()));
    const int limit = at(n.parents[0]).out.shape[0];
    for (int r : rows)
        if (r < 0 || r >= limit)
            throw std::invalid_argument("set_gather_indices: row " + std::to_string(r) +
                                        " out of range [0," + std::to_string(limit) + ")");
    n.indices = std::move(rows);
}

int Graph::matmul(int a, int b) {
    const auto& sa = at(a).out.shape;
    const auto& sb = at(b).out.shape;
    std::vector<int> out;
    if (sa.size() == 2 && sb.size() == 2 && sa[1] == sb[0]) {
        out = {sa[0], sb[1]};
    } else if (sa.size() == 1 && sb.size() == 2 && sa[0] == sb[0]) {
        out = {sb[1]};
    } else if (sa.size() == 2 && sb.size() == 1 && sa[1] == sb[0]) {
        out = {sa[0]};
    } else {
        shape_error("matmul", sa, sb);
    }
    Node n;
    n.op = Op::matmul;
    n.parents = {a, b};
    n.out = Tensor::zeros(std::move(out));
    return push(std::move(n));
}

int Graph::add(int a, int b) {
    const auto& sa = at(a).out.shape;
    const auto& sb = at(b).out.shape;
    const bool same = sa == sb;
    const bool bcast = sa.size() == 2 && sb.size() == 1 && sa[1] == sb[0];
    if (!same && !bcast) shape_error("add", sa, sb);
    Node n;
    n.op = Op::add;
    n.parents = {a, b};
    n.out = Tensor::zeros(sa);
    return push(std::move(n));
}

int Graph::concat(const std::vector<int>& parts) {
    if (parts.empty()) throw std::invalid_argument("concat: needs at least one part");
    const auto& first = at(parts[0]).out.shape;
    if (first.size() != 1 && first.size() != 2)
        shape_error("concat", first);
    int last = 0;
    for (int p : parts) {
        const auto& s = at(p).out.shape;
        if (s.size() != first.size() ||
            (first.size() == 2 && s[0] != first[0]))
            shape_error("concat", first, s);
        last += s.back();
    }
    Node n;
    n.op = Op::concat;
    n.parents = parts;
    n.out = Tensor::zeros(first.size() == 1 ? std::vector<int>{last}
                                            : std::vector<int>{first[0], last});
    return push(std::move(n));
}

namespace {
void check_same_shape(const char* opname, const std::vector<int>& sa,
                      const std::vector<int>& sb) {
    if (sa != sb) shape_error(opname, sa, sb);
}
}  // namespace

int Graph::mul(int a, int b) {
    check_same_shape("mul", at(a).out.shape, at(b).out.shape);
    Node n;
    n.op = Op::mul;
    n.parents = {a, b};
    n.out = Tensor::zeros(at(a).out.shape);
    return push(std::move(n));
}

int Graph::absdiff(int a, int b) {
    check_same_shape("absdiff", at(a).out.shape, at(b).out.shape);
    Node n;
    n.op = Op::absdiff;
    n.parents = {a, b};
    n.out = Tensor::zeros(at(a).out.shape);
    return push(std::move(n));
}

int Graph::sigmoid(int a) {
    Node n;
    n.op = Op::sigmoid;
    n.parents = {a};
    n.out = Tensor::zeros(at(a).out.shape);
    return push(std::move(n));
}

int Graph::tanh(int a) {
    Node n;
    n.op = Op::tanh_fn;
    n.parents = {a};
    n.out = Tensor::zeros(at(a).out.shape);
    return push(std::move(n));
}

int Graph::relu(int a) {
    Node n;
    n.op = Op::relu;
    n.parents = {a};
    n.out = Tensor::zeros(at(a).out.shape);
    return push(std::move(n));
}

int Graph::softplus(int a) {
    Node n;
    n.op = Op::softplus;
    n.parents = {a};
    n.out = Tensor::zeros(at(a).out.shape);
    return push(std::move(n));
}

int Graph::softmax(int a) {
    const auto& s = at(a).out.shape;
    if (s.size() != 1 && s.size() != 2) shape_error("softmax", s);
    Node n;
    n.op = Op::softmax;
    n.parents = {a};
    n.out = Tensor::zeros(s);
    return push(std::move(n));
}

int Graph::max_over_axis(int a, int axis) {
    const auto& s = at(a).out.shape;
    std::vector<int> out;
    if (s.size() == 1 && axis == 0 && s[0] >= 1) {
        out = {};
    } else if (s.size() == 2 && axis == 1 && s[1] >= 1) {
        out = {s[0]};
    } else if (s.size() == 3 && axis == 1 && s[1] >= 1) {
        out = {s[0], s[2]};
    } else {
        throw std::invalid_argument("max_over_axis: unsupported axis " +
                                    std::to_string(axis) + " for shape " +
                                    shape_to_string(s));
    }
    Node n;
    n.op = Op::max_over_axis;
    n.parents = {a};
    n.axis = axis;
    n.out = Tensor::zeros(std::move(out));
    n.argmax.assign(static_cast<std::size_t>(n.out.values.size()), 0);
    return push(std::move(n));
}

int Graph::mean(int a) {
    if (at(a).out.numel() == 0) shape_error("mean", at(a).out.shape);
    Node n;
    n.op = Op::mean;
    n.parents = {a};
    n.out = Tensor::zeros({});
    return push(std::move(n));
}

int Graph::sum(int a) {
    Node n;
    n.op = Op::sum;
    n.parents = {a};
    n.out = Tensor::zeros({});
    return push(std::move(n));
}

int Graph::reshape(int a, std::vector<int> shape) {
    if (shape_numel(shape) != at(a).out.numel())
        shape_error("reshape", at(a).out.shape, shape);
    Node n;
    n.op = Op::reshape;
    n.parents = {a};
    n.out = Tensor::zeros(std::move(shape));
    return push(std::move(n));
}

int Graph::gather_rows(int a, std::vector<int> rows) {
    const auto& s = at(a).out.shape;
    if (s.size() != 2) shape_error("gather_rows", s);
    for (int r : rows)
        if (r < 0 || r >= s[0])
            throw std::invalid_argument("gather_rows: row " + std::to_string(r) +
                                        " out of range for shape " + shape_to_string(s));
    Node n;
    n.op = Op::gather_rows;
    n.parents = {a};
    n.out = Tensor::zeros({static_cast<int>(rows.size()), s[1]});
    n.indices = std::move(rows);
    return push(std::move(n));
}

int Graph::scale_rows(int a, int s) {
    const auto& sa = at(a).out.shape;
    const auto& ss = at(s).out.shape;
    if (sa.size() != 2 || ss.size() != 1 || ss[0] != sa[0]) shape_error("scale_rows", sa, ss);
    Node n;
    n.op = Op::scale_rows;
    n.parents = {a, s};
    n.out = Tensor::zeros(sa);
    return push(std::move(n));
}

int Graph::weighted_pool(int values, int weights) {
    const auto& sv = at(values).out.shape;
    const auto& sw = at(weights).out.shape;
    if (sv.size() != 2 || sw.size() != 2 || sv[0] != sw[0] * sw[1])
        shape_error("weighted_pool", sv, sw);
    Node n;
    n.op = Op::weighted_pool;
    n.parents = {values, weights};
    n.out = Tensor::zeros({sw[0], sv[1]});
    return push(std::move(n));
}

int Graph::mse_loss(int pred, int target) {
    check_same_shape("mse_loss", at(pred).out.shape, at(target).out.shape);
    Node n;
    n.op = Op::mse_loss;
    n.parents = {pred, target};
    n.out = Tensor::zeros({});
    return push(std::move(n));
}

int Graph::multilabel_logloss(int pred, int target) {
    check_same_shape("multilabel_logloss", at(pred).out.shape, at(target).out.shape);
    Node n;
    n.op = Op::multilabel_logloss;
    n.parents = {pred, target};
    n.out = Tensor::zeros({});
    return push(std::move(n));
}

int Graph::categorical_logloss(int pred, int target) {
    const auto& sp = at(pred).out.shape;
    check_same_shape("categorical_logloss", sp, at(target).out.shape);
    if (sp.size() != 1 && sp.size() != 2) shape_error("categorical_logloss", sp);
    Node n;
    n.op = Op::categorical_logloss;
    n.parents = {pred, target};
    n.out = Tensor::zeros({});
    return push(std::move(n));
}

// ---------------------------------------------------------------------------

void Graph::forward() {
    for (std::size_t id = 0; id < nodes_.size(); ++id) {
        Node& n = nodes_[id];
        auto& out = n.out.values;
        auto parent = [&](int k) -> const Tensor& { return nodes_[static_cast<std::size_t>(n.parents[static_cast<std::size_t>(k)])].out; };
        switch (n.op) {
            case Op::input:
                if (!n.filled)
                    throw std::logic_error("forward: input node " + std::to_string(id) +
                                           " was never set");
                break;
            case Op::param:
                if (n.external->values.size() != out.size())
                    throw std::invalid_argument("param tensor changed size");
                out = n.external->values;
                break;
            case Op::matmul: {
                const Tensor& A = parent(0);
                const Tensor& B = parent(1);
                const int m = A.shape.size() == 2 ? A.shape[0] : 1;
                const int k = A.shape.size() == 2 ? A.shape[1] : A.shape[0];
                const int p = B.shape.size() == 2 ? B.shape[1] : 1;
                CMatMap a(A.values.data(), m, k);
                CMatMap b(B.values.data(), k, p);
                MatMap o(out.data(), m, p);
                o.noalias() = a * b;
                break;
            }
            case Op::add: {
                const Tensor& A = parent(0);
                const Tensor& B = parent(1);
                if (A.shape == B.shape) {
                    out = A.values + B.values;
                } else {
                    const int rows = A.shape[0], cols = A.shape[1];
                    CMatMap a(A.values.data(), rows, cols);
                    MatMap o(out.data(), rows, cols);
                    o = a.rowwise() +
                        Eigen::Map<const Eigen::RowVectorXd>(B.values.data(), cols);
                }
                break;
            }
            case Op::concat: {
                const std::vector<int>& os = n.out.shape;
                const int rows = os.size() == 2 ? os[0] : 1;
                const int total = os.back();
                int col = 0;
                for (std::size_t k = 0; k < n.parents.size(); ++k) {
                    const Tensor& P = parent(static_cast<int>(k));
                    const int w = P.shape.back();
                    CMatMap src(P.values.data(), rows, w);
                    MatMap dst(out.data(), rows, total);
                    dst.middleCols(col, w) = src;
                    col += w;
                }
                break;
            }
            case Op::mul:
                out = parent(0).values * parent(1).values;
                break;
            case Op::absdiff:
                out = (parent(0).values - parent(1).values).abs();
                break;
            case Op::sigmoid:
                out = 1.0 / (1.0 + (-parent(0).values).exp());
                break;
            case Op::tanh_fn:
                out = parent(0).values.tanh();
                break;
            case Op::relu:
                out = parent(0).values.max(0.0);
                break;
            case Op::softplus:
                // log(1+e^x) = max(x,0) + log1p(e^{-|x|}), overflow-safe
                out = parent(0).values.max(0.0) +
                      ((-parent(0).values.abs()).exp() + 1.0).log();
                break;
            case Op::softmax: {
                const Tensor& A = parent(0);
                const int rows = A.shape.size() == 2 ? A.shape[0] : 1;
                const int cols = A.shape.back();
                CMatMap a(A.values.data(), rows, cols);
                MatMap o(out.data(), rows, cols);
                for (int r = 0; r < rows; ++r) {
                    const double mx = a.row(r).maxCoeff();
                    const Eigen::ArrayXd shifted = a.row(r).array() - mx;
                    // Entries far enough below the row maximum (e.g. masked
                    // positions biased by -1e30) must come out exactly zero;
                    // the vectorized exp clamps instead of underflowing.
                    o.row(r).array() =
                        (shifted < -745.0).select(0.0, shifted.exp());
                    o.row(r) /= o.row(r).sum();
                }
                break;
            }
            case Op::max_over_axis: {
                const Tensor& A = parent(0);
                if (A.shape.size() == 1) {
                    int best = 0;
                    for (int i = 1; i < A.shape[0]; ++i)
                        if (A.values[i] > A.values[best]) best = i;
                    n.argmax[0] = best;
                    out[0] = A.values[best];
                } else if (A.shape.size() == 2) {
                    const int m = A.shape[0], k = A.shape[1];
                    for (int r = 0; r < m; ++r) {
                        int best = 0;
                        for (int c = 1; c < k; ++c)
                            if (A.values[r * k + c] > A.values[r * k + best]) best = c;
                        n.argmax[static_cast<std::size_t>(r)] = best;
                        out[r] = A.values[r * k + best];
                    }
                } else {
                    const int m = A.shape[0], l = A.shape[1], d = A.shape[2];
                    for (int r = 0; r < m; ++r) {
                        for (int c = 0; c < d; ++c) {
                            int best = 0;
                            for (int t = 1; t < l; ++t)
                                if (A.values[(r * l + t) * d + c] >
                                    A.values[(r * l + best) * d + c])
                                    best = t;
                            n.argmax[static_cast<std::size_t>(r * d + c)] = best;
                            out[r * d + c] = A.values[(r * l + best) * d + c];
                        }
                    }
                }
                break;
            }
            case Op::mean:
                out[0] = parent(0).values.mean();
                break;
            case Op::sum:
                out[0] = parent(0).values.sum();
                break;
            case Op::reshape:
                out = parent(0).values;
                break;
            case Op::gather_rows: {
                const Tensor& A = parent(0);
                const int d = A.shape[1];
                for (std::size_t r = 0; r < n.indices.size(); ++r)
                    out.segment(static_cast<Eigen::Index>(r) * d, d) =
                        A.values.segment(static_cast<Eigen::Index>(n.indices[r]) * d, d);
                break;
            }
            case Op::scale_rows: {
                const Tensor& A = parent(0);
                const Tensor& S = parent(1);
                const int m = A.shape[0], d = A.shape[1];
                CMatMap a(A.values.data(), m, d);
                MatMap o(out.data(), m, d);
                o.array() = a.array().colwise() *
                            Eigen::Map<const Eigen::ArrayXd>(S.values.data(), m);
                break;
            }
            case Op::weighted_pool: {
                const Tensor& V = parent(0);
                const Tensor& W = parent(1);
                const int m = W.shape[0], l = W.shape[1], d = V.shape[1];
                MatMap o(out.data(), m, d);
                CMatMap v(V.values.data(), m * l, d);
                for (int i = 0; i < m; ++i) {
                    o.row(i).setZero();
                    for (int t = 0; t < l; ++t)
                        o.row(i) += W.values[i * l + t] * v.row(i * l + t);
                }
                break;
            }
            case Op::mse_loss: {
                const auto diff = parent(0).values - parent(1).values;
                out[0] = diff.square().sum() / static_cast<double>(diff.size());
                break;
            }
            case Op::multilabel_logloss: {
                const auto p = parent(0).values.min(1.0 - 1e-7).max(1e-7);
                const auto& y = parent(1).values;
                out[0] = -((y * p.log()) + (1.0 - y) * (1.0 - p).log()).sum() /
                         static_cast<double>(p.size());
                break;
            }
            case Op::categorical_logloss: {
                const Tensor& P = parent(0);
                const auto p = P.values.max(1e-12);
                const auto& y = parent(1).values;
                const int rows = P.shape.size() == 2 ? P.shape[0] : 1;
                out[0] = -(y * p.log()).sum() / static_cast<double>(rows);
                break;
            }
        }
    }
}

void Graph::backward(int loss) {
    check_id(loss);
    if (at(loss).out.numel() != 1 || !at(loss).out.shape.empty())
        throw std::invalid_argument("backward: loss node must be scalar, got shape " +
                                    shape_to_string(at(loss).out.shape));
    grads_.resize(nodes_.size());
    for (std::size_t i = 0; i <= static_cast<std::size_t>(loss); ++i) {
        grads_[i].resize(nodes_[i].out.values.size());
        grads_[i].setZero();
    }
    grads_[static_cast<std::size_t>(loss)][0] = 1.0;

    for (int id = loss; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        const Eigen::ArrayXd& g = grads_[static_cast<std::size_t>(id)];
        auto parent = [&](int k) -> const Tensor& {
            return nodes_[static_cast<std::size_t>(n.parents[static_cast<std::size_t>(k)])].out;
        };
        auto pgrad = [&](int k) -> Eigen::ArrayXd& {
            return grads_[static_cast<std::size_t>(n.parents[static_cast<std::size_t>(k)])];
        };
        switch (n.op) {
            case Op::input:
                break;
            case Op::param:
                if (n.external->requires_grad) n.external->grad += g;
                break;
            case Op::matmul: {
                const Tensor& A = parent(0);
                const Tensor& B = parent(1);
                const int m = A.shape.size() == 2 ? A.shape[0] : 1;
                const int k = A.shape.size() == 2 ? A.shape[1] : A.shape[0];
                const int p = B.shape.size() == 2 ? B.shape[1] : 1;
                CMatMap a(A.values.data(), m, k);
                CMatMap b(B.values.data(), k, p);
                CMatMap go(g.data(), m, p);
                MatMap da(pgrad(0).data(), m, k);
                MatMap db(pgrad(1).data(), k, p);
                da.noalias() += go * b.transpose();
                db.noalias() += a.transpose() * go;
                break;
            }
            case Op::add: {
                const Tensor& A = parent(0);
                const Tensor& B = parent(1);
                pgrad(0) += g;
                if (A.shape == B.shape) {
                    pgrad(1) += g;
                } else {
                    const int rows = A.shape[0], cols = A.shape[1];
                    CMatMap go(g.data(), rows, cols);
                    Eigen::Map<Eigen::RowVectorXd> db(pgrad(1).data(), cols);
                    db += go.colwise().sum();
                }
                break;
            }
            case Op::concat: {
                const std::vector<int>& os = n.out.shape;
                const int rows = os.size() == 2 ? os[0] : 1;
                const int total = os.back();
                CMatMap go(g.data(), rows, total);
                int col = 0;
                for (std::size_t k = 0; k < n.parents.size(); ++k) {
                    const Tensor& P = parent(static_cast<int>(k));
                    const int w = P.shape.back();
                    MatMap dp(pgrad(static_cast<int>(k)).data(), rows, w);
                    dp += go.middleCols(col, w);
                    col += w;
                }
                break;
            }
            case Op::mul:
                pgrad(0) += parent(1).values * g;
                pgrad(1) += parent(0).values * g;
                break;
            case Op::absdiff: {
                const auto s = (parent(0).values - parent(1).values).sign();
                pgrad(0) += s * g;
                pgrad(1) -= s * g;
                break;
            }
            case Op::sigmoid:
                pgrad(0) += n.out.values * (1.0 - n.out.values) * g;
                break;
            case Op::tanh_fn:
                pgrad(0) += (1.0 - n.out.values.square()) * g;
                break;
            case Op::relu:
                pgrad(0) += (parent(0).values > 0.0).cast<double>() * g;
                break;
            case Op::softplus:
                pgrad(0) += g / (1.0 + (-parent(0).values).exp());
                break;
            case Op::softmax: {
                const Tensor& A = parent(0);
                const int rows = A.shape.size() == 2 ? A.shape[0] : 1;
                const int cols = A.shape.back();
                CMatMap y(n.out.values.data(), rows, cols);
                CMatMap go(g.data(), rows, cols);
                MatMap da(pgrad(0).data(), rows, cols);
                for (int r = 0; r < rows; ++r) {
                    const double dot = (go.row(r).array() * y.row(r).array()).sum();
                    da.row(r).array() +=
                        y.row(r).array() * (go.row(r).array() - dot);
                }
                break;
            }
            case Op::max_over_axis: {
                const Tensor& A = parent(0);
                Eigen::ArrayXd& da = pgrad(0);
                if (A.shape.size() == 1) {
                    da[n.argmax[0]] += g[0];
                } else if (A.shape.size() == 2) {
                    const int m = A.shape[0], k = A.shape[1];
                    for (int r = 0; r < m; ++r)
                        da[r * k + n.argmax[static_cast<std::size_t>(r)]] += g[r];
                } else {
                    const int m = A.shape[0], l = A.shape[1], d = A.shape[2];
                    for (int r = 0; r < m; ++r)
                        for (int c = 0; c < d; ++c)
                            da[(r * l + n.argmax[static_cast<std::size_t>(r * d + c)]) * d +
                               c] += g[r * d + c];
                }
                break;
            }
            case Op::mean:
                pgrad(0) += g[0] / static_cast<double>(parent(0).values.size());
                break;
            case Op::sum:
                pgrad(0) += g[0];
                break;
            case Op::reshape:
                pgrad(0) += g;
                break;
            case Op::gather_rows: {
                const int d = parent(0).shape[1];
                Eigen::ArrayXd& da = pgrad(0);
                for (std::size_t r = 0; r < n.indices.size(); ++r)
                    da.segment(static_cast<Eigen::Index>(n.indices[r]) * d, d) +=
                        g.segment(static_cast<Eigen::Index>(r) * d, d);
                break;
            }
            case Op::scale_rows: {
                const Tensor& A = parent(0);
                const Tensor& S = parent(1);
                const int m = A.shape[0], d = A.shape[1];
                CMatMap a(A.values.data(), m, d);
                CMatMap go(g.data(), m, d);
                MatMap da(pgrad(0).data(), m, d);
                da.array() += go.array().colwise() *
                              Eigen::Map<const Eigen::ArrayXd>(S.values.data(), m);
                Eigen::Map<Eigen::ArrayXd> ds(pgrad(1).data(), m);
                ds += (go.array() * a.array()).rowwise().sum();
                break;
            }
            case Op::weighted_pool: {
                const Tensor& V = parent(0);
                const Tensor& W = parent(1);
                const int m = W.shape[0], l = W.shape[1], d = V.shape[1];
                CMatMap v(V.values.data(), m * l, d);
                CMatMap go(g.data(), m, d);
                MatMap dv(pgrad(0).data(), m * l, d);
                Eigen::ArrayXd& dw = pgrad(1);
                for (int i = 0; i < m; ++i) {
                    for (int t = 0; t < l; ++t) {
                        dv.row(i * l + t) += W.values[i * l + t] * go.row(i);
                        dw[i * l + t] += (v.row(i * l + t).array() * go.row(i).array()).sum();
                    }
                }
                break;
            }
            case Op::mse_loss: {
                const double scale =
                    2.0 * g[0] / static_cast<double>(parent(0).values.size());
                const auto diff = parent(0).values - parent(1).values;
                pgrad(0) += scale * diff;
                pgrad(1) -= scale * diff;
                break;
            }
            case Op::multilabel_logloss: {
                const auto& praw = parent(0).values;
                const auto p = praw.min(1.0 - 1e-7).max(1e-7);
                const auto& y = parent(1).values;
                const double inv = g[0] / static_cast<double>(p.size());
                // zero gradient where the clip is active
                const auto inside =
                    ((praw > 1e-7) && (praw < 1.0 - 1e-7)).cast<double>();
                pgrad(0) += inv * inside * (p - y) / (p * (1.0 - p));
                break;
            }
            case Op::categorical_logloss: {
                const Tensor& P = parent(0);
                const auto p = P.values.max(1e-12);
                const auto& y = parent(1).values;
                const int rows = P.shape.size() == 2 ? P.shape[0] : 1;
                pgrad(0) += -(g[0] / static_cast<double>(rows)) * y / p;
                break;
            }
        }
    }
}

const Tensor& Graph::value(int id) const { return at(id).out; }

const Eigen::ArrayXd& Graph::node_grad(int id) const {
    check_id(id);
    if (static_cast<std::size_t>(id) >= grads_.size())
        throw std::logic_error("node_grad: backward has not run");
    return grads_[static_cast<std::size_t>(id)];
}

// ---------------------------------------------------------------------------

void adam_step(const std::vector<Tensor*>& params, AdamState& state) {
    if (state.m.empty()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i] = Eigen::ArrayXd::Zero(params[i]->values.size());
            state.v[i] = Eigen::ArrayXd::Zero(params[i]->values.size());
        }
    }
    if (state.m.size() != params.size())
        throw std::invalid_argument("adam_step: parameter count changed");
    ++state.step;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        if (!p.requires_grad) continue;
        if (state.m[i].size() != p.values.size())
            throw std::invalid_argument("adam_step: parameter shape changed");
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * p.grad;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * p.grad.square();
        p.values -= state.lr * (state.m[i] / bc1) / ((state.v[i] / bc2).sqrt() + state.eps);
    }
}

double gradcheck(Graph& graph, int loss, const std::vector<Tensor*>& params, double h) {
    for (Tensor* p : params) p->zero_grad();
    graph.forward();
    graph.backward(loss);
    std::vector<Eigen::ArrayXd> analytic;
    analytic.reserve(params.size());
    for (Tensor* p : params) analytic.push_back(p->grad);

    double worst = 0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        for (Eigen::Index i = 0; i < p.values.size(); ++i) {
            const double orig = p.values[i];
            p.values[i] = orig + h;
            graph.forward();
            const double fp = graph.value(loss).values[0];
            p.values[i] = orig - h;
            graph.forward();
            const double fm = graph.value(loss).values[0];
            p.values[i] = orig;
            const double numeric = (fp - fm) / (2.0 * h);
            const double a = analytic[pi][i];
            const double err = std::abs(a - numeric) /
                               std::max(1.0, std::abs(a) + std::abs(numeric));
            worst = std::max(worst, err);
        }
    }
    graph.forward();  // restore clean forward state
    return worst;
}

// ---------------------------------------------------------------------------

void save_checkpoint(const std::string& path,
                     const std::map<std::string, const Tensor*>& tensors,
                     const std::string& metadata_json) {
    nlohmann::json j;
    j["format_version"] = 1;
    try {
        j["config"] = nlohmann::json::parse(metadata_json);
    } catch (const nlohmann::json::exception& ex) {
        throw std::invalid_argument(std::string("invalid checkpoint metadata JSON: ") +
                                    ex.what());
    }
    nlohmann::json jt = nlohmann::json::object();
    for (const auto& [name, t] : tensors) {
        nlohmann::json entry;
        entry["shape"] = t->shape;
        std::vector<double> vals(t->values.data(), t->values.data() + t->values.size());
        entry["values"] = vals;
        jt[name] = std::move(entry);
    }
    j["tensors"] = std::move(jt);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
    out << j.dump();
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& ex) {
        throw std::runtime_error(path + ": " + ex.what());
    }
    if (!j.contains("format_version") || j["format_version"].get<int>() != 1)
        throw std::runtime_error(path + ": unsupported checkpoint format version");
    Checkpoint cp;
    cp.metadata_json = j.value("config", nlohmann::json::object()).dump();
    for (const auto& [name, entry] : j.at("tensors").items()) {
        const auto shape = entry.at("shape").get<std::vector<int>>();
        const auto vals = entry.at("values").get<std::vector<double>>();
        cp.tensors.emplace(name, Tensor::from(shape, vals));
    }
    return cp;
}

}  // namespace volcast
