#include <doctest.h>

#include <cmath>
#include <random>

#include "ngfreg/lbfgs.hpp"
#include "ngfreg/objective.hpp"
#include "oracles.hpp"

using namespace ngfreg;

namespace {

ObjectiveCallback<double> diagonal_quadratic(std::vector<double> a) {
    return [a](std::span<const double> x, std::span<double> g) {
        double J = 0.0;
        for(std::size_t i = 0; i < x.size(); ++i) {
            J += 0.5 * a[i] * x[i] * x[i];
            g[i] = a[i] * x[i];
        }
        return J;
    };
}

double rosenbrock(std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
}

void check_monotone(const LbfgsTrace &trace) {
    for(std::size_t k = 1; k < trace.iterations.size(); ++k) CHECK(trace.iterations[k].J <= trace.iterations[k - 1].J);
}

} // namespace

TEST_CASE("two-loop recursion") {
    SUBCASE("empty history returns the negative gradient") {
        const LbfgsHistory<double> h(5);
        const std::vector<double> g{1.5, -2.0, 0.0, 3.25};
        const auto d = two_loop_direction(h, std::span<const double>(g));
        for(std::size_t i = 0; i < g.size(); ++i) CHECK(d[i] == -g[i]);
    }
    SUBCASE("reproduces the inverse Hessian of a diagonal quadratic") {
        const std::vector<double> a{1.0, 3.0, 10.0, 0.5};
        LbfgsHistory<double> h(4);
        for(std::size_t i = 0; i < a.size(); ++i) {
            std::vector<double> s(a.size(), 0.0), y(a.size(), 0.0);
            s[i] = 1.0;
            y[i] = a[i];
            CHECK(h.push(s, y));
        }
        std::mt19937_64 rng(1);
        const auto g = oracle::random_vector(rng, a.size());
        const auto d = two_loop_direction(h, std::span<const double>(g));
        for(std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(d[i] + g[i] / a[i]) <= 1e-8);
    }
    SUBCASE("always a descent direction") {
        std::mt19937_64 rng(2);
        for(int t = 0; t < 200; ++t) {
            const std::size_t n = 2 + t % 7;
            LbfgsHistory<double> h(1 + t % 5);
            for(int k = 0; k < 6; ++k) {
                const auto s = oracle::random_vector(rng, n);
                auto y = oracle::random_vector(rng, n);
                h.push(s, y);
            }
            for(const auto &p : h.pairs()) CHECK(p.sy > 1e-10 * std::sqrt(oracle::dot(p.s, p.s) * oracle::dot(p.y, p.y)));
            const auto g = oracle::random_vector(rng, n);
            const auto d = two_loop_direction(h, std::span<const double>(g));
            CHECK(oracle::dot(d, g) < 0.0);
        }
    }
    SUBCASE("curvature filter rejects non-positive pairs") {
        LbfgsHistory<double> h(3);
        CHECK_FALSE(h.push({1.0, 0.0}, {-1.0, 0.0}));
        CHECK_FALSE(h.push({1.0, 0.0}, {0.0, 1.0}));
        CHECK(h.push({1.0, 0.0}, {1.0, 0.0}));
        CHECK(h.size() == 1);
    }
}

TEST_CASE("lbfgs_minimize") {
    SUBCASE("stationary start returns immediately") {
        const auto res = lbfgs_minimize<double>(diagonal_quadratic({1, 2, 3}), {0.0, 0.0, 0.0}, LbfgsConfig{}, StoppingRules{});
        CHECK(res.trace.reason == StopReason::StationaryStart);
        CHECK(res.trace.iterations.size() == 1);
        CHECK(res.x == std::vector<double>{0.0, 0.0, 0.0});
    }
    SUBCASE("ill-conditioned diagonal quadratic") {
        LbfgsConfig cfg;
        cfg.max_iterations = 50;
        StoppingRules stop;
        stop.tol_J = 1e-300;
        stop.tol_grad = 1e-300;
        stop.tol_step = 1e-300;
        stop.abs_grad = 1e-9;
        const auto res = lbfgs_minimize<double>(diagonal_quadratic({1, 10, 100}), {1.0, 1.0, 1.0}, cfg, stop);
        CHECK(res.trace.iterations.size() <= 51);
        for(double v : res.x) CHECK(std::abs(v) <= 1e-6);
        check_monotone(res.trace);
    }
    SUBCASE("Rosenbrock") {
        LbfgsConfig cfg;
        cfg.max_iterations = 200;
        cfg.first_step_limit = 0.0;
        StoppingRules stop;
        stop.tol_J = 1e-300;
        stop.tol_grad = 1e-300;
        stop.tol_step = 1e-300;
        stop.abs_grad = 1e-10;
        const auto res = lbfgs_minimize<double>(rosenbrock, {-1.2, 1.0}, cfg, stop);
        CHECK(std::abs(res.x[0] - 1.0) <= 1e-4);
        CHECK(std::abs(res.x[1] - 1.0) <= 1e-4);
        CHECK(res.trace.iterations.size() <= 201);
        check_monotone(res.trace);
    }
    SUBCASE("single precision") {
        const ObjectiveCallback<float> f = [](std::span<const float> x, std::span<float> g) {
            float J = 0.0f;
            for(std::size_t i = 0; i < x.size(); ++i) {
                J += 0.5f * float(i + 1) * (x[i] - 2.0f) * (x[i] - 2.0f);
                g[i] = float(i + 1) * (x[i] - 2.0f);
            }
            return J;
        };
        const auto res = lbfgs_minimize<float>(f, std::vector<float>(4, 0.0f), LbfgsConfig{}, StoppingRules{});
        for(float v : res.x) CHECK(std::abs(v - 2.0f) <= 1e-2f);
    }
    SUBCASE("line search failure is reported gracefully") {
        // Gradient points the wrong way, so no step along -g can decrease J.
        const ObjectiveCallback<double> bad = [](std::span<const double> x, std::span<double> g) {
            g[0] = -1.0;
            return x[0];
        };
        LbfgsConfig cfg;
        cfg.max_ls_steps = 5;
        const auto res = lbfgs_minimize<double>(bad, {0.0}, cfg, StoppingRules{});
        CHECK(res.trace.line_search_failed);
        CHECK(res.trace.reason == StopReason::LineSearchFailure);
        CHECK(res.x[0] == 0.0);
    }
    SUBCASE("stopping rules wait for min_iterations") {
        StoppingRules stop;
        stop.min_iterations = 4;
        stop.tol_J = 0.9;
        const auto res = lbfgs_minimize<double>(diagonal_quadratic({1, 2, 3, 4}), {1, 1, 1, 1}, LbfgsConfig{}, stop);
        CHECK(res.trace.iterations.size() >= 5);
    }
    SUBCASE("invalid configuration") {
        LbfgsConfig cfg;
        cfg.memory = 0;
        CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
        cfg = {};
        cfg.c1 = 1.0;
        CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
        cfg = {};
        cfg.step_shrink = 1.0;
        CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
        StoppingRules stop;
        stop.tol_J = 0.0;
        CHECK_THROWS_AS(validate(stop), std::invalid_argument);
    }
}

TEST_CASE("registration objective") {
    std::mt19937_64 rng(3);
    const Grid3 image = oracle::box_grid({8, 7, 6}, {0, 0, 0}, {8, 7, 9});
    const Grid3 def = oracle::box_grid({4, 3, 3}, {0, 0, 0}, {8, 7, 9});
    SUBCASE("matched images at the identity") {
        const auto img = oracle::smooth_random_image(rng, image);
        const auto level = make_level_data(img, img, def, NgfParams{10, 10});
        const auto ev = evaluate_objective(make_identity<double>(def), level, 2.0);
        CHECK(std::abs(ev.J) <= 1e-12);
        CHECK(oracle::max_abs(std::vector<double>(ev.grad.begin(), ev.grad.end())) <= 1e-10);
    }
    SUBCASE("constant images leave only the regularizer") {
        const Image3<double> c(image, 5.0);
        const auto level = make_level_data(c, c, def, NgfParams{});
        // Boundary nodes stay put so every sample remains inside the template.
        auto y = make_identity<double>(def);
        for(int d = 0; d < 3; ++d)
            for(std::size_t n = 0; n < def.size(); ++n) {
                const Index3 q = def.delinearize(n);
                bool interior = true;
                for(int e = 0; e < 3; ++e) interior = interior && q[e] > 0 && q[e] + 1 < def.dim(e);
                if(interior) y[d][n] += std::uniform_real_distribution<double>(-0.2, 0.2)(rng);
            }
        const auto ev = evaluate_objective(y, level, 3.0);
        CHECK(curvature_value(y) > 0.0);
        CHECK(std::abs(ev.D) <= 1e-20);
        CHECK(ev.J == doctest::Approx(3.0 * curvature_value(y)).epsilon(1e-14));
    }
    SUBCASE("gradient is component-major and matches central differences") {
        const auto R = oracle::smooth_random_image(rng, image);
        const auto T = oracle::smooth_random_image(rng, image);
        const auto level = make_level_data(R, T, def, NgfParams{10, 10});
        auto y = make_identity<double>(def);
        for(int d = 0; d < 3; ++d)
            for(auto &v : y[d]) v += std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
        const double alpha = 0.7;
        const auto ev = evaluate_objective(y, level, alpha);
        const auto dist = distance_and_gradient(y, level);
        const auto curv = curvature_gradient(y);
        for(int d = 0; d < 3; ++d)
            for(std::size_t n = 0; n < def.size(); ++n)
                CHECK(ev.grad[d * def.size() + n] == doctest::Approx(dist.grad_y[d][n] + alpha * curv[d][n]));

        auto f = [&](const std::vector<double> &x) {
            DeformationField<double> z(def);
            z.assign_flat(std::span<const double>(x));
            return evaluate_objective(z, level, alpha).J;
        };
        auto usable = [&](const std::vector<double> &a, const std::vector<double> &b) {
            DeformationField<double> za(def), zb(def);
            za.assign_flat(std::span<const double>(a));
            zb.assign_flat(std::span<const double>(b));
            return oracle::same_cells(deformation_to_image_grid(za, level.plan), deformation_to_image_grid(zb, level.plan),
                                      image, 1e-9);
        };
        const auto rep = oracle::central_fd(y.flatten(), ev.grad, oracle::all_coords(ev.grad.size()), 1e-5, f, usable);
        CHECK(rep.checked > 0);
        CHECK(rep.relative() <= 1e-6);
    }
    SUBCASE("level objective adapter") {
        const auto R = oracle::smooth_random_image(rng, image);
        const auto level = make_level_data(R, R, def, NgfParams{});
        LevelObjective<double> obj(level, 1.0, PtVariant::Gather, serial_executor());
        const auto x = make_identity<double>(def).flatten();
        std::vector<double> g(x.size());
        CHECK(std::abs(obj(std::span<const double>(x), std::span<double>(g))) <= 1e-12);
        CHECK(obj.evaluations() == 1);
        std::vector<double> wrong(3);
        CHECK_THROWS(obj(std::span<const double>(x), std::span<double>(wrong)));
    }
}
