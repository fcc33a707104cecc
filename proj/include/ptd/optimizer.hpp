#pragma once

#include <string>
#include <vector>

#include "ptd/tensor.hpp"

namespace ptd {

// SGD and Adam over a registered parameter set. step() consumes the
// accumulated gradients and zeroes them.
class Optimizer {
public:
    enum class Kind { Sgd, Adam };

    struct Options {
        Kind kind = Kind::Adam;
        double learning_rate = 0.001;
        double decay_factor = 0.5;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
    };

    explicit Optimizer(Options opts) : opts_(opts), lr_(opts.learning_rate) {}

    void add_parameter(const TensorPtr& p);
    void add_parameters(const std::vector<TensorPtr>& ps);

    void step();
    void zero_grad();
    void decay_lr() { lr_ *= opts_.decay_factor; }
    double learning_rate() const { return lr_; }

private:
    Options opts_;
    double lr_;
    int64_t t_ = 0;
    std::vector<TensorPtr> params_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

}  // namespace ptd
