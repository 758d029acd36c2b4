#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "otafl/channel.hpp"
#include "otafl/ota.hpp"

using namespace otafl;
using Complex = std::complex<double>;
using Eigen::VectorXcd;
using Eigen::VectorXd;

TEST_CASE("grad normalizer") {
    VectorXd g(2);
    g << 3.0, 4.0;
    CHECK(ota::grad_normalizer(g, 2) == doctest::Approx(5.0 / std::sqrt(2.0)));

    VectorXd ones = VectorXd::Ones(7);
    CHECK(ota::grad_normalizer(ones, 7) == doctest::Approx(1.0));

    VectorXd zero = VectorXd::Zero(3);
    CHECK_THROWS_AS(ota::grad_normalizer(zero, 3), ZeroGradientError);
}

TEST_CASE("precoded symbols obey the average power identity") {
    VectorXd g(2);
    g << 3.0, 4.0;
    const double v = ota::grad_normalizer(g, 2);
    auto f = ota::precode_symbols(g, Complex(1.0, 0.0), v);
    CHECK(f.squaredNorm() / 2.0 == doctest::Approx(1.0).epsilon(1e-12));

    // a == v recovers g embedded in the real part
    auto same = ota::precode_symbols(g, Complex(v, 0.0), v);
    for (int i = 0; i < 2; ++i) {
        CHECK(same[i].real() == doctest::Approx(g[i]));
        CHECK(same[i].imag() == doctest::Approx(0.0));
    }

    // power cap boundary: |a|^2 = P_a exactly is accepted
    const double p_a = 0.37;
    auto capped = ota::precode_symbols(g, Complex(std::sqrt(p_a), 0.0), v);
    CHECK(capped.squaredNorm() / 2.0 == doctest::Approx(p_a).epsilon(1e-12));

    CHECK_THROWS_AS(ota::precode_symbols(g, Complex(1.0, 0.0), 0.0), std::invalid_argument);
}

TEST_CASE("receive scaling factor") {
    VectorXcd q(2);
    q << Complex(1.0, 0.0), Complex(0.0, 0.0);

    VectorXcd h1(2), h2(2), h3(2);
    h1 << Complex(2.0, 0.0), Complex(0.0, 0.0);
    h2 << Complex(0.0, 4.0), Complex(1.0, 0.0);
    h3 << Complex(-2.0, 0.0), Complex(0.5, 0.5);

    CHECK(ota::receive_scaling_eta(q, {h1}) == doctest::Approx(0.5));
    CHECK(ota::receive_scaling_eta(q, {h3, h2, h1}) == doctest::Approx(0.25));
    CHECK_THROWS_AS(ota::receive_scaling_eta(q, {}), EmptySelectionError);

    VectorXcd zero = VectorXcd::Zero(2);
    CHECK_THROWS_AS(ota::receive_scaling_eta(q, {zero}), DegenerateChannelError);
}

TEST_CASE("noiseless aligned recovery is exact") {
    VectorXcd h(3);
    h << Complex(0.3, 0.4), Complex(-0.2, 0.1), Complex(0.0, 0.9);
    VectorXcd q = h.normalized();

    std::mt19937_64 rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    VectorXd g(6);
    for (int i = 0; i < 6; ++i) g[i] = gauss(rng);

    const double p_a = 0.8;
    auto single = ota::receive_and_combine({h}, {g}, q, 0.0, p_a, 1);
    CHECK((single.g_hat - g).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((single.e2).cwiseAbs().maxCoeff() <= 1e-9);

    VectorXd g2 = 2.5 * g;
    for (int i = 0; i < 6; ++i) g2[i] += gauss(rng);
    auto both = ota::receive_and_combine({h, h}, {g, g2}, q, 0.0, p_a, 1);
    CHECK((both.g_hat - (g + g2)).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("empirical aggregation error matches the closed form") {
    VectorXcd h(2);
    h << Complex(0.8, 0.0), Complex(0.0, -0.6);
    VectorXcd q = h.normalized();
    const double gain = channel::effective_gain(q, h);

    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int dim = 5;
    VectorXd g(dim);
    for (int i = 0; i < dim; ++i) g[i] = gauss(rng);

    const int k_users = 3;
    const double sigma_n2 = 0.04;
    const double p_a = 1.3;
    const double theory = ota::theoretical_mse(k_users, sigma_n2, g.squaredNorm(), p_a, gain);

    std::vector<VectorXcd> channels(k_users, h);
    std::vector<VectorXd> grads(k_users, g);
    const int trials = 60000;
    double acc = 0.0;
    for (int t = 0; t < trials; ++t) {
        auto out = ota::receive_and_combine(channels, grads, q, sigma_n2, p_a, 1000 + t);
        acc += out.e2.squaredNorm();
        if (t == 0) CHECK(out.noise_draws == k_users * dim);
    }
    const double emp = acc / trials;
    const double band = 3.0 * std::sqrt(2.0 / (double(trials) * dim));
    CHECK(std::abs(emp - theory) / theory <= band);
}

TEST_CASE("receive_and_combine is deterministic per seed and validates input") {
    VectorXcd h(2);
    h << Complex(1.0, 0.0), Complex(0.0, 1.0);
    VectorXcd q = h.normalized();
    VectorXd g(3);
    g << 1.0, -2.0, 0.5;

    auto a = ota::receive_and_combine({h}, {g}, q, 0.1, 1.0, 77);
    auto b = ota::receive_and_combine({h}, {g}, q, 0.1, 1.0, 77);
    CHECK((a.g_hat - b.g_hat).norm() == 0.0);

    CHECK_THROWS_AS(ota::receive_and_combine({}, {}, q, 0.1, 1.0, 1), EmptySelectionError);
    VectorXd zero = VectorXd::Zero(3);
    CHECK_THROWS_AS(ota::receive_and_combine({h}, {zero}, q, 0.1, 1.0, 1), ZeroGradientError);
}

TEST_CASE("theoretical mse closed form and monotonicity") {
    CHECK(ota::theoretical_mse(1, 1.0, 1.0, 1.0, 1.0) == doctest::Approx(1.0));
    CHECK(ota::theoretical_mse(5, 0.01, 4.0, 1.0, 2.0) == doctest::Approx(0.1));
    CHECK(ota::theoretical_mse(3, 0.5, 2.0, 1.0, 4.0) ==
          doctest::Approx(0.5 * ota::theoretical_mse(3, 0.5, 2.0, 1.0, 2.0)));

    double prev = 0.0;
    for (int k = 1; k <= 8; ++k) {
        const double v = ota::theoretical_mse(k, 0.3, 1.7, 0.9, 2.2);
        CHECK(v > prev);
        prev = v;
    }
    for (double gain : {0.5, 1.0, 2.0, 4.0}) {
        CHECK(ota::theoretical_mse(2, 0.3, 1.0, 1.0, gain) >
              ota::theoretical_mse(2, 0.3, 1.0, 1.0, gain * 2));
    }
    CHECK_THROWS_AS(ota::theoretical_mse(1, 0.1, 1.0, 1.0, 0.0), DegenerateChannelError);
}

TEST_CASE("transmit plan honors the power cap") {
    VectorXd g(4);
    g << 1.0, -1.0, 2.0, 0.5;
    const double p_a = 0.37;
    auto plan = ota::make_transmit_plan(g, p_a);
    CHECK(std::norm(plan.a) <= p_a + 1e-12);
    CHECK(std::norm(plan.a) == doctest::Approx(p_a));
    CHECK(plan.v == doctest::Approx(ota::grad_normalizer(g, 4)));
    auto f = ota::precode_symbols(g, plan.a, plan.v);
    CHECK(f.squaredNorm() / 4.0 == doctest::Approx(p_a).epsilon(1e-12));
    CHECK_THROWS_AS(ota::make_transmit_plan(VectorXd::Zero(3), 1.0), ZeroGradientError);
}

TEST_CASE("power compliance across simulated rounds") {
    // every user's transmit weight is sqrt(P_a); check |a|^2 <= P_a via the
    // precode identity on random gradients
    std::mt19937_64 rng(9);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double p_a = 0.6;
    for (int rep = 0; rep < 20; ++rep) {
        VectorXd g(8);
        for (int i = 0; i < 8; ++i) g[i] = gauss(rng);
        const double v = ota::grad_normalizer(g, 8);
        auto f = ota::precode_symbols(g, Complex(std::sqrt(p_a), 0.0), v);
        CHECK(f.squaredNorm() / 8.0 <= p_a + 1e-12);
    }
}
