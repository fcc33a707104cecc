#include "ptd/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace ptd {

GradCheckReport grad_check(const std::vector<std::pair<std::string, TensorPtr>>& params,
                           const std::function<TensorPtr(Tape&)>& loss_fn, double tolerance,
                           double epsilon) {
    GradCheckReport report;
    if (params.empty()) return report;

    for (const auto& [name, p] : params) {
        p->requires_grad = true;
        p->ensure_grad();
        p->zero_grad();
    }

    std::vector<std::vector<double>> analytic;
    {
        Tape tape;
        TensorPtr loss = loss_fn(tape);
        tape.backward(loss);
        for (const auto& [name, p] : params) analytic.push_back(p->grad);
    }

    auto eval = [&]() {
        Tape tape;
        return loss_fn(tape)->scalar();
    };

    for (size_t k = 0; k < params.size(); ++k) {
        const auto& [name, p] = params[k];
        GradCheckEntry entry;
        entry.name = name;
        for (size_t i = 0; i < p->numel(); ++i) {
            const double saved = p->data[i];
            p->data[i] = saved + epsilon;
            const double lp = eval();
            p->data[i] = saved - epsilon;
            const double lm = eval();
            p->data[i] = saved;
            const double gn = (lp - lm) / (2.0 * epsilon);
            const double ga = analytic[k][i];
            // below ~1e-8 the central difference is dominated by cancellation
            // noise, so a relative comparison against a near-zero gradient is
            // meaningless
            const double diff = std::abs(ga - gn);
            const double rel =
                diff <= 1e-8 ? 0.0
                             : diff / std::max({std::abs(ga), std::abs(gn), 1e-8});
            entry.max_rel_err = std::max(entry.max_rel_err, rel);
        }
        entry.pass = entry.max_rel_err <= tolerance;
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.pass = report.pass && entry.pass;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace ptd
