#include "ptd/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace ptd {

namespace {

void check_finite(const char* op, const Tensor& t) {
    double s = 0.0;
    for (double v : t.data) s += v;
    if (!std::isfinite(s)) {
        // Slow path only to produce a precise message.
        for (double v : t.data) {
            if (!std::isfinite(v)) {
                throw Error(std::string(op) + ": non-finite value in output");
            }
        }
        throw Error(std::string(op) + ": non-finite value in output");
    }
}

std::string shape_str(const Tensor& t) {
    return "[" + std::to_string(t.rows) + "x" + std::to_string(t.cols) + "]";
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    throw Error(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

}  // namespace

double Tensor::scalar() const {
    if (numel() != 1) {
        throw Error("scalar() on tensor of " + std::to_string(numel()) + " elements");
    }
    return data[0];
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

void Tensor::zero_grad() {
    std::fill(grad.begin(), grad.end(), 0.0);
}

TensorPtr make_tensor(int rows, int cols, bool requires_grad) {
    auto t = std::make_shared<Tensor>();
    t->rows = rows;
    t->cols = cols;
    t->data.assign(static_cast<size_t>(rows) * cols, 0.0);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr make_tensor(int rows, int cols, std::vector<double> values, bool requires_grad) {
    if (values.size() != static_cast<size_t>(rows) * cols) {
        throw Error("make_tensor: value count does not match shape");
    }
    auto t = std::make_shared<Tensor>();
    t->rows = rows;
    t->cols = cols;
    t->data = std::move(values);
    t->requires_grad = requires_grad;
    return t;
}

TensorPtr make_scalar(double v, bool requires_grad) {
    return make_tensor(1, 1, {v}, requires_grad);
}

TensorPtr Tape::finish(const char* op, TensorPtr out, bool track, std::function<void()> fn) {
    check_finite(op, *out);
    if (track) {
        out->requires_grad = true;
        out->ensure_grad();  // closures read out->grad unconditionally
        nodes_.push_back({op, std::move(fn)});
    }
    return out;
}

void Tape::backward(const TensorPtr& loss) {
    if (loss->numel() != 1) {
        throw Error("backward: loss must be scalar, got " + shape_str(*loss));
    }
    if (nodes_.empty()) {
        throw Error("backward: tape is empty (no forward ops recorded)");
    }
    loss->ensure_grad();
    loss->grad[0] = 1.0;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        it->backward_fn();
    }
}

TensorPtr Tape::matmul(const TensorPtr& a, const TensorPtr& b) {
    if (a->cols != b->rows) shape_error("matmul", *a, *b);
    const int m = a->rows, k = a->cols, n = b->cols;
    auto out = make_tensor(m, n);
    const double* A = a->data.data();
    const double* B = b->data.data();
    double* C = out->data.data();
    for (int i = 0; i < m; ++i) {
        for (int p = 0; p < k; ++p) {
            const double av = A[static_cast<size_t>(i) * k + p];
            if (av == 0.0) continue;
            const double* brow = B + static_cast<size_t>(p) * n;
            double* crow = C + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
    bool track = a->requires_grad || b->requires_grad;
    return finish("matmul", out, track, [a, b, out, m, k, n]() {
        const double* G = out->grad.data();
        if (a->requires_grad) {
            a->ensure_grad();
            const double* B = b->data.data();
            double* dA = a->grad.data();
            for (int i = 0; i < m; ++i) {
                const double* grow = G + static_cast<size_t>(i) * n;
                for (int p = 0; p < k; ++p) {
                    const double* brow = B + static_cast<size_t>(p) * n;
                    double s = 0.0;
                    for (int j = 0; j < n; ++j) s += grow[j] * brow[j];
                    dA[static_cast<size_t>(i) * k + p] += s;
                }
            }
        }
        if (b->requires_grad) {
            b->ensure_grad();
            const double* A = a->data.data();
            double* dB = b->grad.data();
            for (int i = 0; i < m; ++i) {
                const double* grow = G + static_cast<size_t>(i) * n;
                for (int p = 0; p < k; ++p) {
                    const double av = A[static_cast<size_t>(i) * k + p];
                    if (av == 0.0) continue;
                    double* brow = dB + static_cast<size_t>(p) * n;
                    for (int j = 0; j < n; ++j) brow[j] += av * grow[j];
                }
            }
        }
    });
}

TensorPtr Tape::add(const TensorPtr& a, const TensorPtr& b) {
    bool broadcast = (b->rows == 1 && a->cols == b->cols && a->rows != 1);
    if (!broadcast && (a->rows != b->rows || a->cols != b->cols)) {
        shape_error("add", *a, *b);
    }
    auto out = make_tensor(a->rows, a->cols);
    const size_t n = a->numel();
    if (broadcast) {
        for (int i = 0; i < a->rows; ++i) {
            for (int j = 0; j < a->cols; ++j) out->at(i, j) = a->at(i, j) + b->data[j];
        }
    } else {
        for (size_t i = 0; i < n; ++i) out->data[i] = a->data[i] + b->data[i];
    }
    bool track = a->requires_grad || b->requires_grad;
    return finish("add", out, track, [a, b, out, broadcast]() {
        if (a->requires_grad) {
            a->ensure_grad();
            for (size_t i = 0; i < a->numel(); ++i) a->grad[i] += out->grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            if (broadcast) {
                for (int i = 0; i < out->rows; ++i) {
                    for (int j = 0; j < out->cols; ++j) {
                        b->grad[j] += out->grad[static_cast<size_t>(i) * out->cols + j];
                    }
                }
            } else {
                for (size_t i = 0; i < b->numel(); ++i) b->grad[i] += out->grad[i];
            }
        }
    });
}

TensorPtr Tape::elementwise_mul(const TensorPtr& a, const TensorPtr& b) {
    if (a->rows != b->rows || a->cols != b->cols) shape_error("elementwise_mul", *a, *b);
    auto out = make_tensor(a->rows, a->cols);
    for (size_t i = 0; i < a->numel(); ++i) out->data[i] = a->data[i] * b->data[i];
    bool track = a->requires_grad || b->requires_grad;
    return finish("elementwise_mul", out, track, [a, b, out]() {
        if (a->requires_grad) {
            a->ensure_grad();
            for (size_t i = 0; i < a->numel(); ++i) a->grad[i] += out->grad[i] * b->data[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (size_t i = 0; i < b->numel(); ++i) b->grad[i] += out->grad[i] * a->data[i];
        }
    });
}

TensorPtr Tape::scale(const TensorPtr& a, double c) {
    auto out = make_tensor(a->rows, a->cols);
    for (size_t i = 0; i < a->numel(); ++i) out->data[i] = a->data[i] * c;
    return finish("scale", out, a->requires_grad, [a, out, c]() {
        a->ensure_grad();
        for (size_t i = 0; i < a->numel(); ++i) a->grad[i] += out->grad[i] * c;
    });
}

TensorPtr Tape::concat(const std::vector<TensorPtr>& parts, int axis) {
    if (parts.empty()) throw Error("concat: no inputs");
    if (axis != 0 && axis != 1) throw Error("concat: axis must be 0 or 1");
    int rows = parts[0]->rows, cols = parts[0]->cols;
    for (size_t i = 1; i < parts.size(); ++i) {
        if (axis == 0) {
            if (parts[i]->cols != cols) shape_error("concat", *parts[0], *parts[i]);
            rows += parts[i]->rows;
        } else {
            if (parts[i]->rows != rows) shape_error("concat", *parts[0], *parts[i]);
            cols += parts[i]->cols;
        }
    }
    auto out = make_tensor(rows, cols);
    bool track = false;
    if (axis == 0) {
        int r = 0;
        for (const auto& p : parts) {
            std::copy(p->data.begin(), p->data.end(),
                      out->data.begin() + static_cast<size_t>(r) * cols);
            r += p->rows;
            track = track || p->requires_grad;
        }
    } else {
        int c = 0;
        for (const auto& p : parts) {
            for (int i = 0; i < rows; ++i) {
                std::copy(p->data.begin() + static_cast<size_t>(i) * p->cols,
                          p->data.begin() + static_cast<size_t>(i + 1) * p->cols,
                          out->data.begin() + static_cast<size_t>(i) * cols + c);
            }
            c += p->cols;
            track = track || p->requires_grad;
        }
    }
    auto parts_copy = parts;
    return finish("concat", out, track, [parts_copy, out, axis]() {
        if (axis == 0) {
            int r = 0;
            for (const auto& p : parts_copy) {
                if (p->requires_grad) {
                    p->ensure_grad();
                    for (size_t i = 0; i < p->numel(); ++i) {
                        p->grad[i] += out->grad[static_cast<size_t>(r) * out->cols + i];
                    }
                }
                r += p->rows;
            }
        } else {
            int c = 0;
            for (const auto& p : parts_copy) {
                if (p->requires_grad) {
                    p->ensure_grad();
                    for (int i = 0; i < p->rows; ++i) {
                        for (int j = 0; j < p->cols; ++j) {
                            p->grad[static_cast<size_t>(i) * p->cols + j] +=
                                out->grad[static_cast<size_t>(i) * out->cols + c + j];
                        }
                    }
                }
                c += p->cols;
            }
        }
    });
}

TensorPtr Tape::slice(const TensorPtr& a, int row0, int nrows, int col0, int ncols) {
    if (row0 < 0 || col0 < 0 || row0 + nrows > a->rows || col0 + ncols > a->cols) {
        throw Error("slice: range [" + std::to_string(row0) + "," + std::to_string(row0 + nrows) +
                    ")x[" + std::to_string(col0) + "," + std::to_string(col0 + ncols) +
                    ") out of bounds for " + shape_str(*a));
    }
    auto out = make_tensor(nrows, ncols);
    for (int i = 0; i < nrows; ++i) {
        for (int j = 0; j < ncols; ++j) out->at(i, j) = a->at(row0 + i, col0 + j);
    }
    return finish("slice", out, a->requires_grad, [a, out, row0, col0]() {
        a->ensure_grad();
        for (int i = 0; i < out->rows; ++i) {
            for (int j = 0; j < out->cols; ++j) {
                a->grad[static_cast<size_t>(row0 + i) * a->cols + col0 + j] +=
                    out->grad[static_cast<size_t>(i) * out->cols + j];
            }
        }
    });
}

TensorPtr Tape::transpose(const TensorPtr& a) {
    auto out = make_tensor(a->cols, a->rows);
    for (int i = 0; i < a->rows; ++i) {
        for (int j = 0; j < a->cols; ++j) out->at(j, i) = a->at(i, j);
    }
    return finish("transpose", out, a->requires_grad, [a, out]() {
        a->ensure_grad();
        for (int i = 0; i < a->rows; ++i) {
            for (int j = 0; j < a->cols; ++j) {
                a->grad[static_cast<size_t>(i) * a->cols + j] +=
                    out->grad[static_cast<size_t>(j) * out->cols + i];
            }
        }
    });
}

TensorPtr Tape::embedding_lookup(const TensorPtr& table, const std::vector<int>& ids) {
    const int d = table->cols;
    for (int id : ids) {
        if (id < 0 || id >= table->rows) {
            throw Error("embedding_lookup: id " + std::to_string(id) + " out of range [0," +
                        std::to_string(table->rows) + ")");
        }
    }
    auto out = make_tensor(static_cast<int>(ids.size()), d);
    for (size_t i = 0; i < ids.size(); ++i) {
        std::copy(table->data.begin() + static_cast<size_t>(ids[i]) * d,
                  table->data.begin() + static_cast<size_t>(ids[i] + 1) * d,
                  out->data.begin() + i * d);
    }
    return finish("embedding_lookup", out, table->requires_grad, [table, out, ids]() {
        table->ensure_grad();
        const int d = table->cols;
        for (size_t i = 0; i < ids.size(); ++i) {
            for (int j = 0; j < d; ++j) {
                table->grad[static_cast<size_t>(ids[i]) * d + j] += out->grad[i * d + j];
            }
        }
    });
}

TensorPtr Tape::sigmoid(const TensorPtr& a) {
    auto out = make_tensor(a->rows, a->cols);
    for (size_t i = 0; i < a->numel(); ++i) out->data[i] = 1.0 / (1.0 + std::exp(-a->data[i]));
    return finish("sigmoid", out, a->requires_grad, [a, out]() {
        a->ensure_grad();
        for (size_t i = 0; i < a->numel(); ++i) {
            double y = out->data[i];
            a->grad[i] += out->grad[i] * y * (1.0 - y);
        }
    });
}

TensorPtr Tape::tanh(const TensorPtr& a) {
    auto out = make_tensor(a->rows, a->cols);
    for (size_t i = 0; i < a->numel(); ++i) out->data[i] = std::tanh(a->data[i]);
    return finish("tanh", out, a->requires_grad, [a, out]() {
        a->ensure_grad();
        for (size_t i = 0; i < a->numel(); ++i) {
            double y = out->data[i];
            a->grad[i] += out->grad[i] * (1.0 - y * y);
        }
    });
}

TensorPtr Tape::relu(const TensorPtr& a) {
    auto out = make_tensor(a->rows, a->cols);
    for (size_t i = 0; i < a->numel(); ++i) out->data[i] = a->data[i] > 0.0 ? a->data[i] : 0.0;
    return finish("relu", out, a->requires_grad, [a, out]() {
        a->ensure_grad();
        for (size_t i = 0; i < a->numel(); ++i) {
            if (a->data[i] > 0.0) a->grad[i] += out->grad[i];
        }
    });
}

TensorPtr Tape::softmax(const TensorPtr& a) {
    auto out = make_tensor(a->rows, a->cols);
    for (int i = 0; i < a->rows; ++i) {
        double mx = a->at(i, 0);
        for (int j = 1; j < a->cols; ++j) mx = std::max(mx, a->at(i, j));
        double sum = 0.0;
        for (int j = 0; j < a->cols; ++j) {
            double e = std::exp(a->at(i, j) - mx);
            out->at(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < a->cols; ++j) out->at(i, j) /= sum;
    }
    return finish("softmax", out, a->requires_grad, [a, out]() {
        a->ensure_grad();
        for (int i = 0; i < a->rows; ++i) {
            double dot = 0.0;
            for (int j = 0; j < a->cols; ++j) {
                dot += out->grad[static_cast<size_t>(i) * a->cols + j] * out->at(i, j);
            }
            for (int j = 0; j < a->cols; ++j) {
                size_t k = static_cast<size_t>(i) * a->cols + j;
                a->grad[k] += (out->grad[k] - dot) * out->data[k];
            }
        }
    });
}

TensorPtr Tape::log_softmax(const TensorPtr& a) {
    auto out = make_tensor(a->rows, a->cols);
    for (int i = 0; i < a->rows; ++i) {
        double mx = a->at(i, 0);
        for (int j = 1; j < a->cols; ++j) mx = std::max(mx, a->at(i, j));
        double sum = 0.0;
        for (int j = 0; j < a->cols; ++j) sum += std::exp(a->at(i, j) - mx);
        double lse = mx + std::log(sum);
        for (int j = 0; j < a->cols; ++j) out->at(i, j) = a->at(i, j) - lse;
    }
    return finish("log_softmax", out, a->requires_grad, [a, out]() {
        a->ensure_grad();
        for (int i = 0; i < a->rows; ++i) {
            double gsum = 0.0;
            for (int j = 0; j < a->cols; ++j) {
                gsum += out->grad[static_cast<size_t>(i) * a->cols + j];
            }
            for (int j = 0; j < a->cols; ++j) {
                size_t k = static_cast<size_t>(i) * a->cols + j;
                a->grad[k] += out->grad[k] - std::exp(out->data[k]) * gsum;
            }
        }
    });
}

TensorPtr Tape::cross_entropy(const TensorPtr& logits, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != logits->rows) {
        throw Error("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                    std::to_string(logits->rows) + " rows");
    }
    const int n = logits->cols;
    auto probs = std::make_shared<Tensor>();  // saved activation, off-tape
    probs->rows = logits->rows;
    probs->cols = n;
    probs->data.assign(logits->numel(), 0.0);
    double loss = 0.0;
    for (int i = 0; i < logits->rows; ++i) {
        if (labels[i] < 0 || labels[i] >= n) {
            throw Error("cross_entropy: label " + std::to_string(labels[i]) +
                        " out of range [0," + std::to_string(n) + ")");
        }
        double mx = logits->at(i, 0);
        for (int j = 1; j < n; ++j) mx = std::max(mx, logits->at(i, j));
        double sum = 0.0;
        for (int j = 0; j < n; ++j) {
            double e = std::exp(logits->at(i, j) - mx);
            probs->at(i, j) = e;
            sum += e;
        }
        for (int j = 0; j < n; ++j) probs->at(i, j) /= sum;
        loss -= logits->at(i, labels[i]) - mx - std::log(sum);
    }
    auto out = make_scalar(loss);
    return finish("cross_entropy", out, logits->requires_grad, [logits, out, probs, labels]() {
        logits->ensure_grad();
        const double g = out->grad[0];
        const int n = logits->cols;
        for (int i = 0; i < logits->rows; ++i) {
            for (int j = 0; j < n; ++j) {
                double delta = probs->at(i, j) - (j == labels[i] ? 1.0 : 0.0);
                logits->grad[static_cast<size_t>(i) * n + j] += g * delta;
            }
        }
    });
}

TensorPtr Tape::conv1d(const TensorPtr& input, const TensorPtr& weight, const TensorPtr& bias,
                       int width) {
    const int L = input->rows, d = input->cols, nf = weight->rows;
    if (weight->cols != width * d) {
        throw Error("conv1d: weight cols " + std::to_string(weight->cols) + " != width*d " +
                    std::to_string(width * d));
    }
    if (bias->rows != 1 || bias->cols != nf) shape_error("conv1d bias", *bias, *weight);
    if (L < width) {
        throw Error("conv1d: input length " + std::to_string(L) + " < filter width " +
                    std::to_string(width));
    }
    const int lout = L - width + 1;
    auto out = make_tensor(lout, nf);
    const double* X = input->data.data();
    const double* W = weight->data.data();
    for (int t = 0; t < lout; ++t) {
        double* orow = out->data.data() + static_cast<size_t>(t) * nf;
        for (int f = 0; f < nf; ++f) orow[f] = bias->data[f];
        const double* win = X + static_cast<size_t>(t) * d;
        for (int f = 0; f < nf; ++f) {
            const double* wrow = W + static_cast<size_t>(f) * width * d;
            double s = 0.0;
            const int wd = width * d;
            for (int k = 0; k < wd; ++k) s += win[k] * wrow[k];
            orow[f] += s;
        }
    }
    bool track = input->requires_grad || weight->requires_grad || bias->requires_grad;
    return finish("conv1d", out, track, [input, weight, bias, out, width]() {
        const int d = input->cols, nf = weight->rows, lout = out->rows;
        const int wd = width * d;
        const double* G = out->grad.data();
        if (bias->requires_grad) {
            bias->ensure_grad();
            for (int t = 0; t < lout; ++t) {
                for (int f = 0; f < nf; ++f) bias->grad[f] += G[static_cast<size_t>(t) * nf + f];
            }
        }
        if (weight->requires_grad) {
            weight->ensure_grad();
            const double* X = input->data.data();
            for (int t = 0; t < lout; ++t) {
                const double* win = X + static_cast<size_t>(t) * d;
                const double* grow = G + static_cast<size_t>(t) * nf;
                for (int f = 0; f < nf; ++f) {
                    const double g = grow[f];
                    if (g == 0.0) continue;
                    double* wrow = weight->grad.data() + static_cast<size_t>(f) * wd;
                    for (int k = 0; k < wd; ++k) wrow[k] += g * win[k];
                }
            }
        }
        if (input->requires_grad) {
            input->ensure_grad();
            const double* W = weight->data.data();
            for (int t = 0; t < lout; ++t) {
                double* xin = input->grad.data() + static_cast<size_t>(t) * d;
                const double* grow = G + static_cast<size_t>(t) * nf;
                for (int f = 0; f < nf; ++f) {
                    const double g = grow[f];
                    if (g == 0.0) continue;
                    const double* wrow = W + static_cast<size_t>(f) * wd;
                    for (int k = 0; k < wd; ++k) xin[k] += g * wrow[k];
                }
            }
        }
    });
}

TensorPtr Tape::max_over_time_pool(const TensorPtr& a) {
    const int L = a->rows, n = a->cols;
    if (L == 0) throw Error("max_over_time_pool: empty input");
    auto out = make_tensor(1, n);
    auto argmax = std::make_shared<std::vector<int>>(n, 0);
    for (int j = 0; j < n; ++j) {
        double best = a->at(0, j);
        int bi = 0;
        for (int i = 1; i < L; ++i) {
            if (a->at(i, j) > best) {  // strict: first occurrence keeps ties
                best = a->at(i, j);
                bi = i;
            }
        }
        out->data[j] = best;
        (*argmax)[j] = bi;
    }
    return finish("max_over_time_pool", out, a->requires_grad, [a, out, argmax]() {
        a->ensure_grad();
        for (int j = 0; j < a->cols; ++j) {
            a->grad[static_cast<size_t>((*argmax)[j]) * a->cols + j] += out->grad[j];
        }
    });
}

TensorPtr Tape::dropout(const TensorPtr& a, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw Error("dropout: rate must be in [0,1)");
    if (rate == 0.0) return a;
    auto mask = std::make_shared<std::vector<double>>(a->numel());
    const double keep = 1.0 - rate;
    auto out = make_tensor(a->rows, a->cols);
    for (size_t i = 0; i < a->numel(); ++i) {
        (*mask)[i] = rng.uniform() < rate ? 0.0 : 1.0 / keep;
        out->data[i] = a->data[i] * (*mask)[i];
    }
    return finish("dropout", out, a->requires_grad, [a, out, mask]() {
        a->ensure_grad();
        for (size_t i = 0; i < a->numel(); ++i) a->grad[i] += out->grad[i] * (*mask)[i];
    });
}

}  // namespace ptd
