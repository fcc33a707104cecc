#include "ptd/optimizer.hpp"

#include <cmath>

namespace ptd {

void Optimizer::add_parameter(const TensorPtr& p) {
    params_.push_back(p);
    m_.emplace_back(p->numel(), 0.0);
    v_.emplace_back(p->numel(), 0.0);
}

void Optimizer::add_parameters(const std::vector<TensorPtr>& ps) {
    for (const auto& p : ps) add_parameter(p);
}

void Optimizer::zero_grad() {
    for (auto& p : params_) {
        p->ensure_grad();
        p->zero_grad();
    }
}

void Optimizer::step() {
    for (const auto& p : params_) {
        if (p->grad.size() != p->data.size()) {
            throw Error("optimizer step: parameter has no gradient");
        }
    }
    ++t_;
    if (opts_.kind == Kind::Sgd) {
        for (auto& p : params_) {
            for (size_t i = 0; i < p->numel(); ++i) p->data[i] -= lr_ * p->grad[i];
        }
    } else {
        const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
        for (size_t k = 0; k < params_.size(); ++k) {
            auto& p = *params_[k];
            auto& m = m_[k];
            auto& v = v_[k];
            for (size_t i = 0; i < p.numel(); ++i) {
                const double g = p.grad[i];
                m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * g;
                v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * g * g;
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                p.data[i] -= lr_ * mhat / (std::sqrt(vhat) + opts_.epsilon);
            }
        }
    }
    for (auto& p : params_) p->zero_grad();
}

}  // namespace ptd
