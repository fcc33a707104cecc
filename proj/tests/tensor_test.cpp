#include <doctest.h>

#include <cmath>

#include "ptd/grad_check.hpp"
#include "ptd/tensor.hpp"

using namespace ptd;

TEST_CASE("matmul by identity returns the input") {
    Tape tape;
    auto eye = make_tensor(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    auto a = make_tensor(3, 4, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
    auto out = tape.matmul(eye, a);
    for (size_t i = 0; i < a->numel(); ++i) CHECK(out->data[i] == a->data[i]);
}

TEST_CASE("matmul rejects mismatched shapes") {
    Tape tape;
    auto a = make_tensor(2, 3);
    auto b = make_tensor(2, 3);
    CHECK_THROWS_AS(tape.matmul(a, b), Error);
}

TEST_CASE("softmax of equal logits is uniform") {
    Tape tape;
    auto p = tape.softmax(make_tensor(1, 2, {0, 0}));
    CHECK(p->data[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p->data[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(11);
    auto z = make_tensor(4, 7);
    for (auto& v : z->data) v = rng.uniform(-30.0, 30.0);
    Tape tape;
    auto p = tape.softmax(z);
    for (int r = 0; r < 4; ++r) {
        double s = 0;
        for (int c = 0; c < 7; ++c) s += p->at(r, c);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("log_softmax agrees with log of softmax") {
    Rng rng(3);
    auto z = make_tensor(2, 5);
    for (auto& v : z->data) v = rng.uniform(-10.0, 10.0);
    Tape tape;
    auto a = tape.log_softmax(z);
    auto b = tape.softmax(z);
    for (size_t i = 0; i < a->numel(); ++i) {
        CHECK(a->data[i] == doctest::Approx(std::log(b->data[i])).epsilon(1e-10));
    }
}

TEST_CASE("cross entropy of uniform two-class logits is ln 2") {
    Tape tape;
    auto loss = tape.cross_entropy(make_tensor(1, 2, {0.7, 0.7}), {1});
    CHECK(loss->scalar() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("backward through a product gives the other factor") {
    Tape tape;
    auto w = make_scalar(5.0, true);
    auto x = make_scalar(3.0);
    auto loss = tape.elementwise_mul(w, x);
    tape.backward(loss);
    CHECK(w->grad[0] == doctest::Approx(3.0));
}

TEST_CASE("cross entropy gradient is p minus one-hot") {
    auto z = make_tensor(1, 4, {0.3, -1.2, 0.8, 0.1}, true);
    Tape tape;
    auto loss = tape.cross_entropy(z, {2});
    tape.backward(loss);
    Tape probe;
    auto p = probe.softmax(z);
    for (int c = 0; c < 4; ++c) {
        const double expected = p->data[static_cast<size_t>(c)] - (c == 2 ? 1.0 : 0.0);
        CHECK(z->grad[static_cast<size_t>(c)] == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("backward requires a scalar loss") {
    Tape tape;
    auto a = make_tensor(1, 2, {1, 2}, true);
    auto out = tape.relu(a);
    CHECK_THROWS_AS(tape.backward(out), Error);
}

TEST_CASE("gradients accumulate over repeated use of a tensor") {
    auto w = make_scalar(2.0, true);
    Tape tape;
    auto loss = tape.add(w, w);  // dL/dw = 2
    tape.backward(loss);
    CHECK(w->grad[0] == doctest::Approx(2.0));
}

TEST_CASE("row-broadcast add applies the bias to every row") {
    Tape tape;
    auto a = make_tensor(2, 3, {1, 2, 3, 4, 5, 6});
    auto b = make_tensor(1, 3, {10, 20, 30});
    auto out = tape.add(a, b);
    CHECK(out->at(0, 0) == 11);
    CHECK(out->at(1, 2) == 36);
}

TEST_CASE("max over time pool is permutation invariant and ties go first") {
    Tape tape;
    auto a = make_tensor(3, 2, {1, 5, 9, 2, 4, 7});
    auto b = make_tensor(3, 2, {9, 2, 4, 7, 1, 5});  // rows permuted
    auto pa = tape.max_over_time_pool(a);
    auto pb = tape.max_over_time_pool(b);
    CHECK(pa->data[0] == pb->data[0]);
    CHECK(pa->data[1] == pb->data[1]);

    // tie: both rows hold the max in column 0; first row gets the gradient
    auto t = make_tensor(2, 1, {3, 3}, true);
    Tape tape2;
    auto pooled = tape2.max_over_time_pool(t);
    tape2.backward(pooled);
    CHECK(t->grad[0] == doctest::Approx(1.0));
    CHECK(t->grad[1] == doctest::Approx(0.0));
}

TEST_CASE("conv1d output shape and values") {
    // L=4, D=1, one filter of width 2 computing x[t] + 2*x[t+1]
    Tape tape;
    auto x = make_tensor(4, 1, {1, 2, 3, 4});
    auto w = make_tensor(1, 2, {1, 2});
    auto b = make_tensor(1, 1, {0});
    auto out = tape.conv1d(x, w, b, 2);
    REQUIRE(out->rows == 3);
    REQUIRE(out->cols == 1);
    CHECK(out->data[0] == doctest::Approx(5));
    CHECK(out->data[1] == doctest::Approx(8));
    CHECK(out->data[2] == doctest::Approx(11));
}

TEST_CASE("dropout at rate zero is the identity") {
    Rng rng(1);
    Tape tape;
    auto a = make_tensor(2, 2, {1, 2, 3, 4});
    auto out = tape.dropout(a, 0.0, rng);
    for (size_t i = 0; i < a->numel(); ++i) CHECK(out->data[i] == a->data[i]);
}

TEST_CASE("dropout rescales surviving entries") {
    Rng rng(9);
    Tape tape;
    auto a = make_tensor(1, 1000);
    for (auto& v : a->data) v = 1.0;
    auto out = tape.dropout(a, 0.5, rng);
    double mean = 0;
    for (double v : out->data) {
        CHECK((v == 0.0 || v == doctest::Approx(2.0)));
        mean += v;
    }
    mean /= 1000.0;
    CHECK(mean == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("every differentiable op matches finite differences") {
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        Rng rng(seed);
        auto fill = [&](TensorPtr t, double lo = -1.0, double hi = 1.0) {
            for (auto& v : t->data) v = rng.uniform(lo, hi);
            return t;
        };
        auto a = fill(make_tensor(3, 4, true));
        auto b = fill(make_tensor(4, 2, true));
        auto c = fill(make_tensor(3, 2, true));
        auto bias = fill(make_tensor(1, 2, true));
        auto table = fill(make_tensor(6, 3, true));
        auto convw = fill(make_tensor(2, 8, true));  // 2 filters, width 2 over D=4
        auto convb = fill(make_tensor(1, 2, true));

        std::vector<std::pair<std::string, TensorPtr>> params = {
            {"a", a}, {"b", b}, {"c", c}, {"bias", bias},
            {"table", table}, {"convw", convw}, {"convb", convb},
        };
        auto loss_fn = [&](Tape& t) {
            auto mm = t.matmul(a, b);                       // 3x2
            auto added = t.add(t.add(mm, c), bias);         // broadcast add
            auto nl = t.tanh(t.sigmoid(added));
            auto emb = t.embedding_lookup(table, {0, 5, 2});  // 3x3
            auto cat = t.concat({nl, emb}, 1);                // 3x5
            auto sl = t.slice(cat, 0, 3, 1, 3);               // 3x3
            auto tr = t.transpose(sl);                        // 3x3
            auto rl = t.relu(t.scale(tr, 1.7));
            auto catr = t.concat({rl, t.elementwise_mul(sl, sl)}, 0);  // 6x3
            auto padded = t.concat({catr, t.log_softmax(catr)}, 1);    // 6x6... cols 3+3
            auto conv = t.conv1d(t.slice(padded, 0, 6, 0, 4), convw, convb, 2);
            auto pooled = t.max_over_time_pool(conv);  // 1x2
            auto sm = t.softmax(pooled);
            auto logits = t.concat({pooled, sm}, 1);  // 1x4
            return t.cross_entropy(logits, {1});
        };
        auto report = grad_check(params, loss_fn, 1e-4);
        CHECK_MESSAGE(report.pass, "seed ", seed, " max rel err ", report.max_rel_err);
    }
}

TEST_CASE("grad check with no parameters passes vacuously") {
    auto report = grad_check({}, [](Tape& t) { return t.relu(make_scalar(1.0)); }, 1e-4);
    CHECK(report.pass);
    CHECK(report.entries.empty());
}
