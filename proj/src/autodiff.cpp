#include "lsctl/autodiff.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "lsctl/error.hpp"

namespace lsctl::ad {

namespace {

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
    throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": " + std::to_string(a.rows()) + "x" +
                                              std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                              std::to_string(b.cols()));
}

}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

Var Tape::push(Matrix value, std::function<void()> back) {
    Node n;
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::param(Parameter& p) {
    if (auto it = leaves_.find(&p); it != leaves_.end()) return Var{it->second};
    Node n;
    n.ref = &p.value;
    n.param = &p;
    nodes_.push_back(std::move(n));
    const int id = static_cast<int>(nodes_.size()) - 1;
    leaves_.emplace(&p, id);
    return Var{id};
}

Var Tape::constant(Matrix value) { return push(std::move(value)); }

const Matrix& Tape::value(Var v) const { return val(v.id); }
const Matrix& Tape::grad(Var v) const { return nodes_[v.id].grad; }

Var Tape::matmul(Var x, Var w) {
    const Matrix& X = val(x.id);
    const Matrix& W = val(w.id);
    if (X.cols() != W.rows()) shape_error("matmul", X, W);
    Var out = push(X * W);
    nodes_[out.id].back = [this, x, w, out] {
        const Matrix& G = g(out.id);
        g(x.id).noalias() += G * val(w.id).transpose();
        g(w.id).noalias() += val(x.id).transpose() * G;
    };
    return out;
}

Var Tape::add_row(Var x, Var row) {
    const Matrix& X = val(x.id);
    const Matrix& R = val(row.id);
    if (R.rows() != 1 || R.cols() != X.cols()) shape_error("add_row", X, R);
    Matrix out = X;
    out.rowwise() += R.row(0);
    Var o = push(std::move(out));
    nodes_[o.id].back = [this, x, row, o] {
        g(x.id) += g(o.id);
        g(row.id) += g(o.id).colwise().sum();
    };
    return o;
}

Var Tape::add(Var a, Var b) {
    const Matrix& A = val(a.id);
    const Matrix& B = val(b.id);
    if (A.rows() != B.rows() || A.cols() != B.cols()) shape_error("add", A, B);
    Var o = push(A + B);
    nodes_[o.id].back = [this, a, b, o] {
        g(a.id) += g(o.id);
        g(b.id) += g(o.id);
    };
    return o;
}

Var Tape::scale(Var x, double s) {
    Var o = push(val(x.id) * s);
    nodes_[o.id].back = [this, x, o, s] { g(x.id) += g(o.id) * s; };
    return o;
}

Var Tape::gelu(Var x) {
    Var o = push(val(x.id).unaryExpr([](double v) { return ad::gelu(v); }));
    nodes_[o.id].back = [this, x, o] {
        g(x.id) += g(o.id).cwiseProduct(val(x.id).unaryExpr([](double v) { return gelu_grad(v); }));
    };
    return o;
}

Var Tape::layer_norm(Var x, Var gamma, Var beta, double eps) {
    const Matrix& X = val(x.id);
    const Matrix& Gm = val(gamma.id);
    const Matrix& Bt = val(beta.id);
    if (Gm.rows() != 1 || Gm.cols() != X.cols()) shape_error("layer_norm", X, Gm);
    if (Bt.rows() != 1 || Bt.cols() != X.cols()) shape_error("layer_norm", X, Bt);
    const Eigen::Index n = X.rows();
    const Eigen::Index m = X.cols();
    Matrix xhat(n, m);
    Eigen::VectorXd inv_std(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double mu = X.row(i).mean();
        const double var = (X.row(i).array() - mu).square().mean();
        inv_std(i) = 1.0 / std::sqrt(var + eps);
        xhat.row(i) = (X.row(i).array() - mu) * inv_std(i);
    }
    Matrix out = xhat.array().rowwise() * Gm.row(0).array();
    out.rowwise() += Bt.row(0);
    Var o = push(std::move(out));
    nodes_[o.id].back = [this, x, gamma, beta, o, xhat = std::move(xhat), inv_std = std::move(inv_std)] {
        const Matrix& G = g(o.id);
        g(gamma.id) += G.cwiseProduct(xhat).colwise().sum();
        g(beta.id) += G.colwise().sum();
        const Matrix dxhat = G.array().rowwise() * val(gamma.id).row(0).array();
        const double m = static_cast<double>(dxhat.cols());
        Matrix& gx = g(x.id);
        for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
            const double s1 = dxhat.row(i).sum();
            const double s2 = dxhat.row(i).dot(xhat.row(i));
            gx.row(i).array() +=
                inv_std(i) / m * (m * dxhat.row(i).array() - s1 - xhat.row(i).array() * s2);
        }
    };
    return o;
}

Var Tape::aggregate(Var h, std::shared_ptr<const std::vector<Edge>> edges) {
    const Matrix& H = val(h.id);
    const auto n = H.rows();
    for (const Edge& e : *edges)
        if (e.src < 0 || e.dst < 0 || e.src >= n || e.dst >= n)
            throw Error(ErrorCode::ShapeMismatch, "aggregate: edge endpoint outside [0, " + std::to_string(n) + ")");
    Matrix out = Matrix::Zero(n, H.cols());
    for (const Edge& e : *edges) out.row(e.dst) += e.weight * H.row(e.src);
    Var o = push(std::move(out));
    nodes_[o.id].back = [this, h, o, edges = std::move(edges)] {
        const Matrix& G = g(o.id);
        Matrix& gh = g(h.id);
        for (const Edge& e : *edges) gh.row(e.src) += e.weight * G.row(e.dst);
    };
    return o;
}

namespace {
void check_groups(const Matrix& H, const std::vector<int>& groups, int num_groups, std::vector<int>& counts) {
    if (static_cast<Eigen::Index>(groups.size()) != H.rows())
        throw Error(ErrorCode::ShapeMismatch, "group membership length differs from row count");
    counts.assign(num_groups, 0);
    for (int k : groups) {
        if (k < 0 || k >= num_groups) throw Error(ErrorCode::ShapeMismatch, "group index out of range");
        ++counts[k];
    }
    for (int k = 0; k < num_groups; ++k)
        if (counts[k] == 0) throw Error(ErrorCode::ShapeMismatch, "empty group " + std::to_string(k));
}
}  // namespace

Var Tape::group_max(Var h, std::shared_ptr<const std::vector<int>> groups, int num_groups) {
    const Matrix& H = val(h.id);
    std::vector<int> counts;
    check_groups(H, *groups, num_groups, counts);
    const auto m = H.cols();
    Matrix out(num_groups, m);
    Eigen::MatrixXi arg = Eigen::MatrixXi::Constant(num_groups, m, -1);
    for (Eigen::Index i = 0; i < H.rows(); ++i) {
        const int k = (*groups)[i];
        for (Eigen::Index c = 0; c < m; ++c)
            if (arg(k, c) < 0 || H(i, c) > out(k, c)) {
                out(k, c) = H(i, c);
                arg(k, c) = static_cast<int>(i);
            }
    }
    Var o = push(std::move(out));
    nodes_[o.id].back = [this, h, o, arg = std::move(arg)] {
        const Matrix& G = g(o.id);
        Matrix& gh = g(h.id);
        for (Eigen::Index k = 0; k < arg.rows(); ++k)
            for (Eigen::Index c = 0; c < arg.cols(); ++c) gh(arg(k, c), c) += G(k, c);
    };
    return o;
}

Var Tape::group_mean(Var h, std::shared_ptr<const std::vector<int>> groups, int num_groups) {
    const Matrix& H = val(h.id);
    std::vector<int> counts;
    check_groups(H, *groups, num_groups, counts);
    Matrix out = Matrix::Zero(num_groups, H.cols());
    for (Eigen::Index i = 0; i < H.rows(); ++i) out.row((*groups)[i]) += H.row(i);
    for (int k = 0; k < num_groups; ++k) out.row(k) /= counts[k];
    Var o = push(std::move(out));
    nodes_[o.id].back = [this, h, o, groups = std::move(groups), counts = std::move(counts)] {
        const Matrix& G = g(o.id);
        Matrix& gh = g(h.id);
        for (Eigen::Index i = 0; i < gh.rows(); ++i) {
            const int k = (*groups)[i];
            gh.row(i) += G.row(k) / counts[k];
        }
    };
    return o;
}

Var Tape::mean_rows(Var x) {
    const Matrix& X = val(x.id);
    if (X.rows() == 0) throw Error(ErrorCode::ShapeMismatch, "mean_rows of an empty matrix");
    Var o = push(X.colwise().mean());
    nodes_[o.id].back = [this, x, o] {
        Matrix& gx = g(x.id);
        gx.rowwise() += g(o.id).row(0) / static_cast<double>(gx.rows());
    };
    return o;
}

Var Tape::concat_cols(Var a, Var b) {
    const Matrix& A = val(a.id);
    const Matrix& B = val(b.id);
    if (A.rows() != B.rows()) shape_error("concat_cols", A, B);
    Matrix out(A.rows(), A.cols() + B.cols());
    out << A, B;
    const auto ca = A.cols();
    Var o = push(std::move(out));
    nodes_[o.id].back = [this, a, b, o, ca] {
        const Matrix& G = g(o.id);
        g(a.id) += G.leftCols(ca);
        g(b.id) += G.rightCols(G.cols() - ca);
    };
    return o;
}

Var Tape::mul_row(Var x, Var row) {
    const Matrix& X = val(x.id);
    const Matrix& R = val(row.id);
    if (R.rows() != 1 || R.cols() != X.cols()) shape_error("mul_row", X, R);
    Matrix out = X.array().rowwise() * R.row(0).array();
    Var o = push(std::move(out));
    nodes_[o.id].back = [this, x, row, o] {
        const Matrix& G = g(o.id);
        g(x.id).array() += G.array().rowwise() * val(row.id).row(0).array();
        g(row.id) += G.cwiseProduct(val(x.id)).colwise().sum();
    };
    return o;
}

Var Tape::select_col(Var x, int col) {
    const Matrix& X = val(x.id);
    if (col < 0 || col >= X.cols())
        throw Error(ErrorCode::ShapeMismatch, "select_col: column " + std::to_string(col) + " out of range");
    Var o = push(X.col(col));
    nodes_[o.id].back = [this, x, o, col] { g(x.id).col(col) += g(o.id).col(0); };
    return o;
}

Var Tape::dot(Var x, const Matrix& c) {
    const Matrix& X = val(x.id);
    if (X.rows() != c.rows() || X.cols() != c.cols()) shape_error("dot", X, c);
    Matrix out(1, 1);
    out(0, 0) = X.cwiseProduct(c).sum();
    Var o = push(std::move(out));
    nodes_[o.id].back = [this, x, o, c] { g(x.id) += g(o.id)(0, 0) * c; };
    return o;
}

namespace {
double huber(double u, double kappa) {
    const double a = std::abs(u);
    return a <= kappa ? 0.5 * u * u : kappa * (a - 0.5 * kappa);
}
double huber_grad(double u, double kappa) {
    if (std::abs(u) <= kappa) return u;
    return u > 0 ? kappa : -kappa;
}
}  // namespace

Var Tape::quantile_huber(Var z, std::vector<double> taus, std::vector<double> targets, double kappa) {
    const Matrix& Z = val(z.id);
    if (Z.cols() != 1 || Z.rows() != static_cast<Eigen::Index>(taus.size()) || targets.empty())
        throw Error(ErrorCode::ShapeMismatch, "quantile_huber: z must be K x 1 with K taus and K' >= 1 targets");
    const double inv_kp = 1.0 / static_cast<double>(targets.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < taus.size(); ++i)
        for (double t : targets) {
            const double u = t - Z(static_cast<Eigen::Index>(i), 0);
            loss += std::abs(taus[i] - (u < 0 ? 1.0 : 0.0)) * huber(u, kappa) / kappa * inv_kp;
        }
    Matrix out(1, 1);
    out(0, 0) = loss;
    Var o = push(std::move(out));
    nodes_[o.id].back = [this, z, o, taus = std::move(taus), targets = std::move(targets), kappa, inv_kp] {
        const double G = g(o.id)(0, 0);
        const Matrix& Zv = val(z.id);
        Matrix& gz = g(z.id);
        for (std::size_t i = 0; i < taus.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            for (double t : targets) {
                const double u = t - Zv(r, 0);
                gz(r, 0) -= G * std::abs(taus[i] - (u < 0 ? 1.0 : 0.0)) * huber_grad(u, kappa) / kappa * inv_kp;
            }
        }
    };
    return o;
}

void Tape::backward(Var loss) {
    if (nodes_.empty() || !loss.valid() || loss.id >= size())
        throw Error(ErrorCode::NotRecorded, "backward called without a recorded forward pass");
    const Matrix& L = val(loss.id);
    if (L.rows() != 1 || L.cols() != 1) shape_error("backward", L, Matrix(1, 1));
    for (int i = 0; i <= loss.id; ++i) {
        const Matrix& v = val(i);
        nodes_[i].grad = Matrix::Zero(v.rows(), v.cols());
    }
    nodes_[loss.id].grad(0, 0) = 1.0;
    for (int i = loss.id; i >= 0; --i)
        if (nodes_[i].back) nodes_[i].back();
    for (int i = 0; i <= loss.id; ++i)
        if (nodes_[i].param) nodes_[i].param->grad += nodes_[i].grad;
}

}  // namespace lsctl::ad
