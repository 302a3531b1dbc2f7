#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace volcast {

/// Dense double-precision array. shape {} denotes a scalar with one value.
struct Tensor {
    std::vector<int> shape;
    Eigen::ArrayXd values;
    bool requires_grad = false;
    Eigen::ArrayXd grad;  // same length as values when requires_grad

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor from(std::vector<int> shape, std::vector<double> values,
                       bool requires_grad = false);
    static Tensor scalar(double v);

    std::int64_t numel() const { return values.size(); }
    void zero_grad() {
        if (requires_grad) grad.setZero();
    }
};

std::int64_t shape_numel(const std::vector<int>& shape);
std::string shape_to_string(const std::vector<int>& shape);

/// Reverse-mode computation graph over a fixed topology. Build the graph
/// once with `input` placeholders and `param` leaves, then repeatedly fill
/// inputs, run `forward`, and run `backward` per batch. Backward accumulates
/// into each parameter's `grad` without resetting it, so callers zero
/// parameter gradients between steps.
class Graph {
public:
    /// Placeholder leaf; fill with set_input before forward.
    int input(std::vector<int> shape);
    /// Trainable leaf owned by the caller; values are re-read every forward
    /// and gradients accumulate into t->grad.
    int param(Tensor* t);

    void set_input(int id, const std::vector<double>& values);
    void set_input(int id, const Eigen::ArrayXd& values);
    /// Replaces the row indices of a gather_rows node (bounds-checked).
    void set_gather_indices(int id, std::vector<int> rows);

    // --- core operations -------------------------------------------------
    /// [m,k]@[k,n] -> [m,n]; also [k]@[k,n] -> [n] and [m,k]@[k] -> [m].
    int matmul(int a, int b);
    /// Same-shape elementwise sum, or [m,n] + [n] broadcast over rows.
    int add(int a, int b);
    /// Concatenation along the last axis (all other axes must agree).
    int concat(const std::vector<int>& parts);
    int mul(int a, int b);      // same-shape elementwise product
    int absdiff(int a, int b);  // same-shape |a - b|
    int sigmoid(int a);
    int tanh(int a);
    int relu(int a);
    int softplus(int a);
    /// Row-wise softmax over the last axis (1-D or 2-D input), max-shifted
    /// for stability.
    int softmax(int a);
    /// Maximum over one axis: 1-D axis 0 -> scalar; [m,k] axis 1 -> [m];
    /// [m,l,d] axis 1 -> [m,d]. Gradient flows to the first (lowest-index)
    /// maximizing position.
    int max_over_axis(int a, int axis);
    int mean(int a);  // scalar mean of all entries
    int sum(int a);   // scalar sum of all entries
    /// Same data, new shape (element count preserved).
    int reshape(int a, std::vector<int> shape);
    /// Selects rows of a 2-D (or 1-D) tensor; indices may repeat and can be
    /// swapped per batch with set_gather_indices (embedding lookup).
    int gather_rows(int a, std::vector<int> rows);
    /// Multiplies row i of a [m,n] tensor by s[i] (s is 1-D of length m).
    int scale_rows(int a, int s);
    /// Grouped weighted sum: values [m*l, d] with weights [m, l] ->
    /// out[i,:] = sum_t weights[i,t] * values[i*l + t, :].
    int weighted_pool(int values, int weights);

    // --- losses (scalar outputs) -----------------------------------------
    int mse_loss(int pred, int target);
    /// Mean binary log loss over every (sample, label) entry; predictions
    /// are clipped to [1e-7, 1-1e-7] before the logs and the gradient is
    /// zero in the clipped region.
    int multilabel_logloss(int pred, int target);
    /// Mean over rows of -sum_k target*ln(pred); rows of pred should lie on
    /// the simplex (softmax output).
    int categorical_logloss(int pred, int target);

    void forward();
    /// Reverse sweep from a scalar node; throws if `loss` is not scalar.
    void backward(int loss);

    const Tensor& value(int id) const;
    const Eigen::ArrayXd& node_grad(int id) const;
    std::size_t size() const { return nodes_.size(); }

private:
    enum class Op {
        input, param, matmul, add, concat, mul, absdiff, sigmoid, tanh_fn,
        relu, softplus, softmax, max_over_axis, mean, sum, reshape,
        gather_rows, scale_rows, weighted_pool, mse_loss, multilabel_logloss,
        categorical_logloss
    };

    struct Node {
        Op op;
        std::vector<int> parents;
        Tensor out;
        Tensor* external = nullptr;   // param leaves
        std::vector<int> indices;     // gather_rows
        std::vector<int> argmax;      // max_over_axis cache
        int axis = 0;                 // max_over_axis
        bool filled = false;          // input leaves
    };

    int push(Node n);
    const Node& at(int id) const;
    Node& at(int id);
    void check_id(int id) const;

    std::vector<Node> nodes_;
    std::vector<Eigen::ArrayXd> grads_;
};

/// Bias-corrected Adam state over an ordered parameter list.
struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long step = 0;
    std::vector<Eigen::ArrayXd> m;
    std::vector<Eigen::ArrayXd> v;
};

/// One update of every parameter from its accumulated gradient. Moment
/// buffers are allocated on first use; the parameter list must keep the same
/// order and shapes across calls.
void adam_step(const std::vector<Tensor*>& params, AdamState& state);

/// Max relative central-difference error of d(loss)/d(param) over every
/// element of every listed parameter; error = |a-n| / max(1, |a|+|n|).
double gradcheck(Graph& graph, int loss, const std::vector<Tensor*>& params,
                 double h = 1e-5);

/// Versioned JSON manifest of named tensors (exact double round-trip).
/// `metadata` is stored verbatim under "config" and returned on load.
void save_checkpoint(const std::string& path,
                     const std::map<std::string, const Tensor*>& tensors,
                     const std::string& metadata_json = "{}");

struct Checkpoint {
    std::map<std::string, Tensor> tensors;
    std::string metadata_json;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace volcast
