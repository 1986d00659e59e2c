#include <doctest.h>

#include <cmath>
#include <numeric>

#include "p2pfaas/errors.hpp"
#include "p2pfaas/model.hpp"
#include "p2pfaas/rng.hpp"

using namespace p2pfaas;

namespace {

Batch single_sample(std::vector<double> x, std::int32_t y) {
    Batch batch;
    batch.feature_dim = static_cast<int>(x.size());
    batch.features = std::move(x);
    batch.labels = {y};
    return batch;
}

Batch random_batch(const Architecture& arch, std::size_t rows, Rng& rng) {
    Batch batch;
    batch.feature_dim = arch.input_dim();
    for (std::size_t r = 0; r < rows; ++r) {
        for (int d = 0; d < arch.input_dim(); ++d) batch.features.push_back(rng.normal());
        batch.labels.push_back(static_cast<std::int32_t>(rng.next_u64() % arch.num_classes()));
    }
    return batch;
}

// Independent gradient oracle: central finite differences of the batch loss.
std::vector<double> finite_difference_gradient(const ModelParams& model, const Batch& batch, double h = 1e-5) {
    std::vector<double> grad(model.values.size());
    std::vector<double> params = model.values;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double original = params[i];
        params[i] = original + h;
        const double up = detail::batch_loss(model.arch, params, batch);
        params[i] = original - h;
        const double down = detail::batch_loss(model.arch, params, batch);
        params[i] = original;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

void check_gradient_against_oracle(const ModelParams& model, const Batch& batch, double tol) {
    const GradientVector grad = compute_batch_gradient(model, batch);
    const std::vector<double> oracle = finite_difference_gradient(model, batch);
    for (std::size_t i = 0; i < grad.values.size(); ++i) {
        const double scale = std::max({1.0, std::fabs(grad.values[i]), std::fabs(oracle[i])});
        CHECK(std::fabs(grad.values[i] - oracle[i]) <= tol * scale);
    }
}

}  // namespace

TEST_CASE("init_model is deterministic for a fixed seed") {
    const Architecture arch = Architecture::logistic_regression(4, 2);
    const ModelParams a = init_model(arch, 7);
    const ModelParams b = init_model(arch, 7);
    CHECK(a.values == b.values);
    CHECK(a.version == 0);
    const ModelParams c = init_model(arch, 8);
    CHECK(a.values != c.values);
}

TEST_CASE("mlp parameter count") {
    const Architecture arch = Architecture::mlp({4, 8, 2});
    CHECK(arch.param_count() == 58);  // 4*8+8 + 8*2+2
    CHECK(init_model(arch, 1).values.size() == 58);
}

TEST_CASE("init_model draws stay inside the fan-in bound and center on zero") {
    const Architecture arch = Architecture::logistic_regression(1, 2);
    double mean = 0.0;
    const int seeds = 1000;
    for (int seed = 0; seed < seeds; ++seed) {
        const ModelParams model = init_model(arch, static_cast<std::uint64_t>(seed));
        for (double v : model.values) CHECK(std::fabs(v) <= 1.0);  // r = 1/sqrt(1)
        mean += model.values.front();
    }
    mean /= seeds;
    CHECK(std::fabs(mean) < 0.05);  // Monte Carlo over seeds
}

TEST_CASE("invalid architectures are rejected") {
    CHECK_THROWS_AS(Architecture::logistic_regression(0, 2), ConfigError);
    CHECK_THROWS_AS(Architecture::logistic_regression(3, 1), ConfigError);
    CHECK_THROWS_AS(Architecture::mlp({4, -1, 2}), ConfigError);
}

TEST_CASE("zero-weight logistic gradient matches the closed form") {
    // d=1, k=2, all-zero weights, single sample (x=1, y=1): softmax is
    // uniform, so dW = (p - onehot(y)) * x and db = p - onehot(y).
    const Architecture arch = Architecture::logistic_regression(1, 2);
    ModelParams model;
    model.arch = arch;
    model.values.assign(arch.param_count(), 0.0);
    const GradientVector grad = compute_batch_gradient(model, single_sample({1.0}, 1));
    // layout: W[1x2] then b[2]
    CHECK(grad.values[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(grad.values[1] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(grad.values[2] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(grad.values[3] == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(grad.batch_count == 1);
    CHECK(grad.source_version == model.version);
}

TEST_CASE("duplicated sample gives the single-sample gradient") {
    const Architecture arch = Architecture::mlp({3, 4, 2});
    const ModelParams model = init_model(arch, 11);
    Rng rng(5);
    Batch one = random_batch(arch, 1, rng);
    Batch repeated;
    repeated.feature_dim = one.feature_dim;
    for (int copy = 0; copy < 3; ++copy) {
        repeated.features.insert(repeated.features.end(), one.features.begin(), one.features.end());
        repeated.labels.push_back(one.labels.front());
    }
    const GradientVector g1 = compute_batch_gradient(model, one);
    const GradientVector g3 = compute_batch_gradient(model, repeated);
    for (std::size_t i = 0; i < g1.values.size(); ++i) {
        CHECK(g3.values[i] == doctest::Approx(g1.values[i]).epsilon(1e-14));
    }
}

TEST_CASE("mlp gradient matches central finite differences") {
    const Architecture arch = Architecture::mlp({2, 3, 2});
    const ModelParams model = init_model(arch, 42);
    Rng rng(99);
    const Batch batch = random_batch(arch, 5, rng);
    check_gradient_against_oracle(model, batch, 1e-6);
}

TEST_CASE("gradient errors") {
    const Architecture arch = Architecture::logistic_regression(3, 2);
    const ModelParams model = init_model(arch, 0);
    CHECK_THROWS_AS(compute_batch_gradient(model, single_sample({1.0, 2.0}, 0)), ShapeError);
    ModelParams poisoned = model;
    poisoned.values[0] = std::nan("");
    CHECK_THROWS_AS(compute_batch_gradient(poisoned, single_sample({1.0, 2.0, 3.0}, 0)), NumericError);
    CHECK_THROWS_AS(compute_batch_gradient(model, single_sample({1.0, 2.0, 3.0}, 7)), ValidationError);
}

TEST_CASE("average_batch_gradients") {
    GradientVector g1{{1.0, 2.0}, 0, 1};
    GradientVector g2{{3.0, 4.0}, 0, 1};

    SUBCASE("hand arithmetic") {
        const GradientVector avg = average_batch_gradients({g1, g2});
        CHECK(avg.values[0] == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(avg.values[1] == doctest::Approx(3.0).epsilon(1e-15));
        CHECK(avg.batch_count == 2);
    }

    SUBCASE("mean of identical vectors is the vector") {
        const GradientVector avg = average_batch_gradients({g1, g1, g1});
        CHECK(avg.values[0] == doctest::Approx(g1.values[0]).epsilon(1e-15));
        CHECK(avg.values[1] == doctest::Approx(g1.values[1]).epsilon(1e-15));
        CHECK(avg.batch_count == 3);
    }

    SUBCASE("matches a compensated-sum oracle") {
        Rng rng(2024);
        std::vector<GradientVector> grads;
        const std::size_t len = 64;
        for (int i = 0; i < 30; ++i) {
            GradientVector g;
            g.source_version = 0;
            for (std::size_t j = 0; j < len; ++j) g.values.push_back(rng.normal() * 10.0);
            grads.push_back(std::move(g));
        }
        const GradientVector avg = average_batch_gradients(grads);
        for (std::size_t j = 0; j < len; ++j) {
            // Neumaier summation as the independent high-precision oracle.
            double sum = 0.0;
            double compensation = 0.0;
            for (const GradientVector& g : grads) {
                const double t = sum + g.values[j];
                if (std::fabs(sum) >= std::fabs(g.values[j])) {
                    compensation += (sum - t) + g.values[j];
                } else {
                    compensation += (g.values[j] - t) + sum;
                }
                sum = t;
            }
            const double oracle = (sum + compensation) / 30.0;
            CHECK(std::fabs(avg.values[j] - oracle) <= 1e-12);
        }
    }

    SUBCASE("errors") {
        CHECK_THROWS_AS(average_batch_gradients({}), ValidationError);
        GradientVector stale = g2;
        stale.source_version = 3;
        CHECK_THROWS_AS(average_batch_gradients({g1, stale}), StalenessError);
    }
}

TEST_CASE("averaging is linear over concatenation") {
    // mean(A ++ B) equals the batch_count-weighted mean of the partial means.
    Rng rng(606);
    const auto make = [&](int count) {
        std::vector<GradientVector> grads;
        for (int i = 0; i < count; ++i) {
            GradientVector g;
            g.source_version = 0;
            g.batch_count = 1;
            for (int j = 0; j < 16; ++j) g.values.push_back(rng.normal());
            grads.push_back(std::move(g));
        }
        return grads;
    };
    const std::vector<GradientVector> a = make(7);
    const std::vector<GradientVector> b = make(5);
    std::vector<GradientVector> both = a;
    both.insert(both.end(), b.begin(), b.end());

    const GradientVector avg_a = average_batch_gradients(a);
    const GradientVector avg_b = average_batch_gradients(b);
    const GradientVector avg_all = average_batch_gradients(both);
    CHECK(avg_all.batch_count == avg_a.batch_count + avg_b.batch_count);

    const double wa = static_cast<double>(avg_a.batch_count);
    const double wb = static_cast<double>(avg_b.batch_count);
    for (std::size_t j = 0; j < avg_all.values.size(); ++j) {
        const double weighted = (wa * avg_a.values[j] + wb * avg_b.values[j]) / (wa + wb);
        CHECK(std::fabs(avg_all.values[j] - weighted) <= 1e-12);
    }
}

TEST_CASE("apply_update") {
    const Architecture arch = Architecture::logistic_regression(1, 2);
    ModelParams model = init_model(arch, 3);

    SUBCASE("zero gradient leaves values unchanged and bumps the version") {
        GradientVector zero{std::vector<double>(model.values.size(), 0.0), model.version, 1};
        const ModelParams next = apply_update(model, zero, 0.1);
        CHECK(next.values == model.values);
        CHECK(next.version == model.version + 1);
    }

    SUBCASE("hand arithmetic") {
        ModelParams tiny;
        tiny.arch = arch;
        tiny.values = {1.0, 1.0, 0.0, 0.0};
        GradientVector grad{{2.0, -2.0, 0.0, 0.0}, 0, 1};
        const ModelParams next = apply_update(tiny, grad, 0.5);
        CHECK(next.values[0] == 0.0);
        CHECK(next.values[1] == 2.0);
    }

    SUBCASE("version mismatch is stale") {
        GradientVector grad{std::vector<double>(model.values.size(), 0.0), model.version + 1, 1};
        CHECK_THROWS_AS(apply_update(model, grad, 0.1), StalenessError);
    }

    SUBCASE("one small step on the convex logistic loss decreases it") {
        Rng rng(77);
        const Batch batch = random_batch(arch, 64, rng);
        const double before = detail::batch_loss(arch, model.values, batch);
        const GradientVector grad = compute_batch_gradient(model, batch);
        const ModelParams next = apply_update(model, grad, 1e-3);
        const double after = detail::batch_loss(arch, next.values, batch);
        CHECK(after < before);
    }
}

TEST_CASE("evaluate") {
    const Architecture arch = Architecture::logistic_regression(2, 2);

    SUBCASE("uniform prediction has loss ln 2") {
        ModelParams model;
        model.arch = arch;
        model.values.assign(arch.param_count(), 0.0);
        Batch batch;
        batch.feature_dim = 2;
        batch.features = {1.0, 2.0, -1.0, 0.5};
        batch.labels = {0, 1};
        const Evaluation ev = evaluate(model, {batch});
        CHECK(ev.loss.value == doctest::Approx(std::log(2.0)).epsilon(1e-9));
        CHECK(ev.loss.sample_count == 2);
    }

    SUBCASE("perfect separator reaches accuracy 1") {
        // w picks class 1 for x0 > 0 with a huge margin.
        ModelParams model;
        model.arch = arch;
        model.values = {-100.0, 100.0, 0.0, 0.0, 0.0, 0.0};
        Batch batch;
        batch.feature_dim = 2;
        batch.features = {1.0, 0.0, -1.0, 0.0, 2.0, 5.0};
        batch.labels = {1, 0, 1};
        const Evaluation ev = evaluate(model, {batch});
        CHECK(ev.accuracy == 1.0);
    }

    SUBCASE("random model on balanced random labels sits near 0.5 accuracy") {
        const ModelParams model = init_model(arch, 123);
        Rng rng(321);
        Batch batch;
        batch.feature_dim = 2;
        const int n = 10000;
        for (int i = 0; i < n; ++i) {
            batch.features.push_back(rng.normal());
            batch.features.push_back(rng.normal());
            batch.labels.push_back(static_cast<std::int32_t>(i % 2));
        }
        const Evaluation ev = evaluate(model, {batch});
        CHECK(ev.accuracy > 0.48);
        CHECK(ev.accuracy < 0.52);
    }

    SUBCASE("empty dataset is rejected") {
        const ModelParams model = init_model(arch, 1);
        CHECK_THROWS_AS(evaluate(model, {}), ValidationError);
    }
}

TEST_CASE("gradient determinism across repeated evaluation") {
    const Architecture arch = Architecture::mlp({4, 6, 3});
    const ModelParams model = init_model(arch, 1234);
    Rng rng(55);
    const Batch batch = random_batch(arch, 16, rng);
    const GradientVector a = compute_batch_gradient(model, batch);
    const GradientVector b = compute_batch_gradient(model, batch);
    CHECK(a.values == b.values);  // bitwise
}
