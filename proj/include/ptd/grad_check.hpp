#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ptd/tensor.hpp"

namespace ptd {

struct GradCheckEntry {
    std::string name;
    double max_rel_err = 0.0;
    bool pass = true;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    bool pass = true;
    double max_rel_err = 0.0;
};

// Central finite-difference check of reverse-mode gradients. loss_fn must
// be a pure function of the given parameters, evaluated on a fresh tape per
// call. Relative error per element: |ga - gn| / max(|ga|, |gn|, 1e-8).
GradCheckReport grad_check(const std::vector<std::pair<std::string, TensorPtr>>& params,
                           const std::function<TensorPtr(Tape&)>& loss_fn, double tolerance,
                           double epsilon = 1e-5);

}  // namespace ptd
