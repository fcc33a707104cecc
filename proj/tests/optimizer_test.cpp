#include <doctest.h>

#include <cmath>

#include "ptd/optimizer.hpp"

using namespace ptd;

TEST_CASE("sgd applies lr times gradient") {
    auto w = make_scalar(1.0, true);
    w->ensure_grad();
    w->grad[0] = 2.0;
    Optimizer opt({Optimizer::Kind::Sgd, 0.1});
    opt.add_parameter(w);
    opt.step();
    CHECK(w->data[0] == doctest::Approx(0.8));
    CHECK(w->grad[0] == 0.0);  // consumed
}

TEST_CASE("one decay event halves the default learning rate") {
    Optimizer opt({});
    CHECK(opt.learning_rate() == doctest::Approx(0.001));
    opt.decay_lr();
    CHECK(opt.learning_rate() == doctest::Approx(0.0005));
}

TEST_CASE("adam converges on a scalar quadratic") {
    auto w = make_scalar(0.0, true);
    Optimizer::Options opts;
    opts.learning_rate = 0.01;
    Optimizer opt(opts);
    opt.add_parameter(w);
    for (int i = 0; i < 1000; ++i) {
        Tape tape;
        auto diff = tape.add(w, make_scalar(-3.0));
        auto loss = tape.elementwise_mul(diff, diff);
        tape.backward(loss);
        opt.step();
    }
    CHECK(std::abs(w->data[0] - 3.0) < 0.05);
}

TEST_CASE("step without gradients is an error") {
    auto w = make_scalar(1.0, true);
    Optimizer opt({});
    opt.add_parameter(w);
    CHECK_THROWS_AS(opt.step(), Error);
}
