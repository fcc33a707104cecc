#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ptd/common.hpp"
#include "ptd/rng.hpp"

namespace ptd {

// Dense 2-D array of f64 values in row-major order. All tensors in the
// engine are matrices; vectors are 1xN, scalars 1x1.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;
    std::vector<double> grad;  // same size as data once touched by backward
    bool requires_grad = false;

    size_t numel() const { return data.size(); }
    double& at(int r, int c) { return data[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
    double scalar() const;

    void ensure_grad();
    void zero_grad();
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(int rows, int cols, bool requires_grad = false);
TensorPtr make_tensor(int rows, int cols, std::vector<double> values, bool requires_grad = false);
TensorPtr make_scalar(double v, bool requires_grad = false);

// Reverse-mode tape. Forward ops record a backward closure; backward()
// replays them in exact reverse order, so gradient accumulation is
// deterministic. One tape per loss evaluation.
class Tape {
public:
    TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
    // Same-shape addition, or row-broadcast when b is 1xN.
    TensorPtr add(const TensorPtr& a, const TensorPtr& b);
    TensorPtr elementwise_mul(const TensorPtr& a, const TensorPtr& b);
    TensorPtr scale(const TensorPtr& a, double c);
    // axis 0: stack rows; axis 1: join columns.
    TensorPtr concat(const std::vector<TensorPtr>& parts, int axis);
    TensorPtr slice(const TensorPtr& a, int row0, int nrows, int col0, int ncols);
    TensorPtr transpose(const TensorPtr& a);
    TensorPtr embedding_lookup(const TensorPtr& table, const std::vector<int>& ids);
    TensorPtr sigmoid(const TensorPtr& a);
    TensorPtr tanh(const TensorPtr& a);
    TensorPtr relu(const TensorPtr& a);
    TensorPtr softmax(const TensorPtr& a);      // row-wise
    TensorPtr log_softmax(const TensorPtr& a);  // row-wise
    // Sum of per-row negative log-likelihoods: -sum_i log softmax(logits)[i, labels[i]].
    TensorPtr cross_entropy(const TensorPtr& logits, const std::vector<int>& labels);
    // Valid 1-D convolution over time. input is LxD, weight is Fx(W*D),
    // bias 1xF; output is (L-W+1)xF.
    TensorPtr conv1d(const TensorPtr& input, const TensorPtr& weight, const TensorPtr& bias,
                     int width);
    // LxF -> 1xF, per-column max; ties resolve to the first occurrence.
    TensorPtr max_over_time_pool(const TensorPtr& a);
    // Inverted dropout; identity when rate == 0.
    TensorPtr dropout(const TensorPtr& a, double rate, Rng& rng);

    void backward(const TensorPtr& loss);
    size_t size() const { return nodes_.size(); }
    void clear() { nodes_.clear(); }

private:
    struct Node {
        const char* op;
        std::function<void()> backward_fn;
    };
    std::vector<Node> nodes_;

    TensorPtr finish(const char* op, TensorPtr out, bool track, std::function<void()> fn);
};

}  // namespace ptd
