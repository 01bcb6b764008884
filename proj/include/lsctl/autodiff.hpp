#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "lsctl/env.hpp"

namespace lsctl::ad {

using Matrix = RowMatrix;

/// Trainable array with its accumulated gradient.
struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}
};

struct Var {
    int id = -1;
    bool valid() const noexcept { return id >= 0; }
};

/// Reverse-mode tape. Every op appends a node holding its value and a closure
/// that pushes the node's gradient to its inputs. Parameters enter as leaves
/// referencing their storage; backward() adds into Parameter::grad.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var param(Parameter& p);
    Var constant(Matrix value);

    const Matrix& value(Var v) const;
    const Matrix& grad(Var v) const;
    int size() const noexcept { return static_cast<int>(nodes_.size()); }

    /// X (n x k) * W (k x m)
    Var matmul(Var x, Var w);
    /// Adds a 1 x m row to every row of X.
    Var add_row(Var x, Var row);
    Var add(Var a, Var b);
    Var scale(Var x, double s);
    Var gelu(Var x);
    /// Row-wise normalization followed by gamma/beta (both 1 x m).
    Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
    /// out_i = sum over edges (j -> i) of w * h_j; nodes without in-edges get zero.
    Var aggregate(Var h, std::shared_ptr<const std::vector<Edge>> edges);
    Var group_max(Var h, std::shared_ptr<const std::vector<int>> groups, int num_groups);
    Var group_mean(Var h, std::shared_ptr<const std::vector<int>> groups, int num_groups);
    Var mean_rows(Var x);
    Var concat_cols(Var a, Var b);
    /// Multiplies every row of X elementwise by the 1 x m row.
    Var mul_row(Var x, Var row);
    Var select_col(Var x, int col);
    /// Sum of X .* C for a constant C of the same shape.
    Var dot(Var x, const Matrix& c);
    /// sum_i (1/K') sum_j |tau_i - 1{u_ij < 0}| * Huber_kappa(u_ij) / kappa, u_ij = target_j - z_i.
    /// z is K x 1.
    Var quantile_huber(Var z, std::vector<double> taus, std::vector<double> targets, double kappa = 1.0);

    /// Throws Error(NotRecorded) if nothing was recorded or loss is invalid,
    /// Error(ShapeMismatch) if loss is not 1 x 1.
    void backward(Var loss);

private:
    struct Node {
        Matrix value;
        const Matrix* ref = nullptr;
        Parameter* param = nullptr;
        Matrix grad;
        std::function<void()> back;
    };

    Var push(Matrix value, std::function<void()> back = {});
    Matrix& g(int id) { return nodes_[id].grad; }
    const Matrix& val(int id) const { return nodes_[id].ref ? *nodes_[id].ref : nodes_[id].value; }

    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, int> leaves_;
};

double gelu(double x);
double gelu_grad(double x);

}  // namespace lsctl::ad
