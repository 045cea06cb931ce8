#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <vector>
#include <sstream>

#include "dampe/error.hpp"
#include "dampe/hetgraph.hpp"
#include "dampe/matrix.hpp"
#include "dampe/optim.hpp"
#include "dampe/rng.hpp"
#include "dampe/tape.hpp"

using namespace dampe;

TEST_CASE("matrix file format round-trips at full precision") {
    Rng rng(11);
    DenseMatrix m(5, 3);
    for (double& x : m.data) x = rng.normal() * std::pow(10.0, rng.normal() * 3.0);
    std::stringstream ss;
    write_matrix(ss, m);
    DenseMatrix back = read_matrix(ss);
    REQUIRE(back.rows == m.rows);
    REQUIRE(back.cols == m.cols);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(back.data[i] == m.data[i]);
}

TEST_CASE("identity gradient") {
    ParamStore params;
    params.add("x", DenseMatrix(1, 1, 3.0));
    Tape tape;
    Var x = tape.param(params, "x");
    Var loss = tape.sum_all(x);
    CHECK(tape.scalar(loss) == 3.0);
    tape.backward(loss);
    CHECK(params.grad("x").data[0] == 1.0);
}

TEST_CASE("softmax + cross-entropy gradient equals softmax minus one-hot") {
    ParamStore params;
    DenseMatrix x(1, 4);
    x.data = {0.3, -1.2, 2.0, 0.1};
    params.add("x", x);
    DenseMatrix onehot(1, 4, 0.0);
    onehot.at(0, 2) = 1.0;

    Tape tape;
    Var logits = tape.param(params, "x");
    Var loss = tape.mean_ce_with_logits(logits, onehot);
    tape.backward(loss);

    // Hand algebra: d CE / d logit = softmax(logit) - onehot.
    double z = 0.0;
    for (double v : x.data) z += std::exp(v);
    for (std::size_t j = 0; j < 4; ++j) {
        const double expect = std::exp(x.data[j]) / z - onehot.data[j];
        CHECK(params.grad("x").data[j] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("two-layer MLP gradients match central finite differences") {
    Rng rng(42);
    ParamStore params;
    auto init = [&](const std::string& name, std::size_t r, std::size_t c) {
        DenseMatrix m(r, c);
        for (double& x : m.data) x = 0.5 * rng.normal();
        params.add(name, m);
    };
    init("w1", 5, 6);
    init("b1", 1, 6);
    init("w2", 6, 3);
    init("b2", 1, 3);
    DenseMatrix input(4, 5);
    for (double& x : input.data) x = rng.normal();
    DenseMatrix target(4, 3, 0.0);
    for (std::size_t i = 0; i < 4; ++i) target.at(i, i % 3) = 1.0;

    auto build = [&](Tape& t) {
        Var h = t.tanh(t.add_rowvec(t.matmul(t.constant(input), t.param(params, "w1")),
                                    t.param(params, "b1")));
        Var logits = t.add_rowvec(t.matmul(h, t.param(params, "w2")), t.param(params, "b2"));
        return t.mean_ce_with_logits(logits, target);
    };
    CHECK(finite_diff_check(params, build, 1e-5) < 1e-4);
}

TEST_CASE("finite differences are near-exact for an affine map") {
    Rng rng(3);
    ParamStore params;
    DenseMatrix w(3, 2);
    for (double& x : w.data) x = rng.normal();
    params.add("w", w);
    DenseMatrix input(2, 3);
    for (double& x : input.data) x = rng.normal();
    auto build = [&](Tape& t) {
        return t.mean_all(t.matmul(t.constant(input), t.param(params, "w")));
    };
    CHECK(finite_diff_check(params, build, 1e-5) < 1e-9);
}

TEST_CASE("property: every primitive matches finite differences on random shapes") {
    Rng rng(2024);
    using Builder = std::function<Var(Tape&, ParamStore&, Var, Var)>;
    // Each primitive is exercised in isolation under a smooth scalarization.
    const std::vector<std::pair<const char*, Builder>> primitives = {
        {"add", [](Tape& t, ParamStore&, Var a, Var b) { return t.add(a, b); }},
        {"sub", [](Tape& t, ParamStore&, Var a, Var b) { return t.sub(a, b); }},
        {"mul", [](Tape& t, ParamStore&, Var a, Var b) { return t.mul(a, b); }},
        {"affine", [](Tape& t, ParamStore&, Var a, Var) { return t.affine(a, 1.7, -0.3); }},
        {"sigmoid", [](Tape& t, ParamStore&, Var a, Var) { return t.sigmoid(a); }},
        {"tanh", [](Tape& t, ParamStore&, Var a, Var) { return t.tanh(a); }},
        {"softmax_rows", [](Tape& t, ParamStore&, Var a, Var) { return t.softmax_rows(a); }},
        {"transpose", [](Tape& t, ParamStore&, Var a, Var) { return t.transpose(a); }},
        {"matmul",
         [](Tape& t, ParamStore&, Var a, Var b) { return t.matmul(a, t.transpose(b)); }},
        {"matmul_setsum",
         [](Tape& t, ParamStore&, Var a, Var b) { return t.matmul_setsum(a, t.transpose(b)); }},
        {"concat_cols", [](Tape& t, ParamStore&, Var a, Var b) { return t.concat_cols(a, b); }},
        {"slice_cols",
         [](Tape& t, ParamStore&, Var a, Var) {
             return t.slice_cols(a, 0, t.value(a).cols > 1 ? t.value(a).cols - 1 : 1);
         }},
        {"gather_rows",
         [](Tape& t, ParamStore&, Var a, Var) {
             std::vector<std::size_t> idx{0, 0, t.value(a).rows - 1};
             return t.gather_rows(a, idx);
         }},
        {"add_rowvec",
         [](Tape& t, ParamStore& p, Var a, Var) { return t.add_rowvec(a, t.param(p, "row")); }},
        {"mul_rowvec",
         [](Tape& t, ParamStore& p, Var a, Var) { return t.mul_rowvec(a, t.param(p, "row")); }},
        {"mul_colvec",
         [](Tape& t, ParamStore& p, Var a, Var) { return t.mul_colvec(a, t.param(p, "col")); }},
        {"layer_norm_rows",
         [](Tape& t, ParamStore& p, Var a, Var) {
             return t.layer_norm_rows(a, t.param(p, "row"), t.param(p, "row2"));
         }},
        {"scatter_pairs",
         [](Tape& t, ParamStore& p, Var a, Var) {
             const std::size_t n = t.value(a).rows;
             const auto pairs = ordered_pairs(n);
             Var vals = t.param(p, "pairvals");
             return t.add(t.scatter_pairs(vals, pairs, n), t.matmul(a, t.transpose(a)));
         }},
    };

    for (const auto& [name, builder] : primitives) {
        CAPTURE(name);
        for (int trial = 0; trial < 3; ++trial) {
            const std::size_t n = 2 + rng.uniform_index(7);
            const std::size_t c = 2 + rng.uniform_index(7);
            ParamStore params;
            auto init = [&](const std::string& pname, std::size_t r_, std::size_t c_,
                            double shift = 0.0) {
                DenseMatrix m(r_, c_);
                for (double& x : m.data) x = 0.8 * rng.normal() + shift;
                params.add(pname, m);
            };
            init("a", n, c);
            init("b", n, c);
            init("row", 1, c, 0.5);
            init("row2", 1, c);
            init("col", n, 1, 0.5);
            init("pairvals", n * (n - 1), 1);
            auto build = [&](Tape& t) {
                Var out = builder(t, params, t.param(params, "a"), t.param(params, "b"));
                return t.mean_all(t.mul(out, out));
            };
            CHECK(finite_diff_check(params, build, 1e-5) < 1e-4);
        }
    }
}

TEST_CASE("backward rejects non-scalar loss") {
    ParamStore params;
    params.add("x", DenseMatrix(2, 2, 1.0));
    Tape tape;
    Var x = tape.param(params, "x");
    CHECK_THROWS_AS(tape.backward(x), ContractViolation);
}

TEST_CASE("non-finite op values raise a numeric fault naming the op") {
    Tape tape;
    DenseMatrix big(1, 1, 1e308);
    Var x = tape.constant(big);
    CHECK_THROWS_AS(tape.mul(x, x), NumericFault);
}

TEST_CASE("adamw: zero gradient and zero decay leave parameters unchanged") {
    ParamStore params;
    params.add("w", DenseMatrix(2, 2, 1.5));
    params.zero_grad();
    AdamW opt(AdamW::Hyper{0.1, 0.9, 0.999, 1e-8, 0.0});
    opt.step(params);
    for (double v : params.value("w").data) CHECK(v == 1.5);
}

TEST_CASE("adamw: first step with unit gradient moves by about -lr") {
    ParamStore params;
    params.add("w", DenseMatrix(1, 1, 0.7));
    params.zero_grad();
    params.grad("w").data[0] = 1.0;
    AdamW opt(AdamW::Hyper{0.1, 0.9, 0.999, 1e-8, 0.0});
    opt.step(params);
    // mhat = 1, vhat = 1: delta = -lr / (1 + eps).
    CHECK(params.value("w").data[0] == doctest::Approx(0.7 - 0.1).epsilon(1e-6));
}

TEST_CASE("adamw: decoupled decay shrinks the parameter") {
    auto run = [](double decay) {
        ParamStore params;
        params.add("w", DenseMatrix(1, 1, 2.0));
        params.zero_grad();
        params.grad("w").data[0] = 0.5;
        AdamW opt(AdamW::Hyper{0.1, 0.9, 0.999, 1e-8, decay});
        opt.step(params);
        return params.value("w").data[0];
    };
    CHECK(std::fabs(run(1e-4)) < std::fabs(run(0.0)));
}

TEST_CASE("adamw is bitwise deterministic") {
    auto run = [] {
        Rng rng(9);
        ParamStore params;
        DenseMatrix w(3, 3);
        for (double& x : w.data) x = rng.normal();
        params.add("w", w);
        AdamW opt(AdamW::Hyper{1e-3, 0.9, 0.999, 1e-8, 1e-4});
        for (int s = 0; s < 20; ++s) {
            params.zero_grad();
            for (double& gx : params.grad("w").data) gx = rng.normal();
            opt.step(params);
        }
        return params.value("w").data;
    };
    CHECK(run() == run());
}

TEST_CASE("one-cycle schedule endpoints and continuity") {
    OneCycle s{8e-4, 0.1, 1000};
    CHECK(s.rate(0) == doctest::Approx(8e-4 / 25.0).epsilon(1e-15));
    // Peak exactly at the end of warmup.
    const std::size_t warm_end = 100;  // round(0.1 * 999) = 100
    CHECK(s.rate(warm_end) == 8e-4);
    CHECK(s.rate(999) == doctest::Approx(8e-4 / 1000.0).epsilon(1e-12));
    // Continuity across the boundary.
    CHECK(std::fabs(s.rate(warm_end + 1) - s.rate(warm_end)) < 2e-8);
    // Max emitted rate is the peak.
    double mx = 0.0;
    for (std::size_t t = 0; t < 1000; ++t) mx = std::max(mx, s.rate(t));
    CHECK(mx == 8e-4);
    for (std::size_t t = 0; t < 1000; ++t) CHECK(s.rate(t) > 0.0);
    CHECK_THROWS_AS(s.rate(1000), ContractViolation);
}
