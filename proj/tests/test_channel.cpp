#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <complex>
#include <random>

#include "otafl/channel.hpp"

using namespace otafl;
using channel::AntennaLayout;
using Complex = std::complex<double>;

namespace {

AntennaLayout make_layout(std::initializer_list<double> xs, std::initializer_list<double> ys,
                          double v_x = 0.0, double v_y = 0.0) {
    AntennaLayout layout;
    layout.x = Eigen::VectorXd(static_cast<Eigen::Index>(xs.size()));
    layout.y = Eigen::VectorXd(static_cast<Eigen::Index>(ys.size()));
    Eigen::Index i = 0;
    for (double x : xs) layout.x[i++] = x;
    i = 0;
    for (double y : ys) layout.y[i++] = y;
    layout.region = {-10.0, 10.0, -10.0, 10.0};
    layout.v_x = v_x;
    layout.v_y = v_y;
    return layout;
}

}  // namespace

TEST_CASE("array response basics") {
    auto single = make_layout({0.0}, {0.0});
    auto a = channel::array_response(single, 0.7, -0.3, 0.1);
    REQUIRE(a.size() == 1);
    CHECK(a[0].real() == doctest::Approx(1.0));
    CHECK(a[0].imag() == doctest::Approx(0.0));

    // half-wavelength offset flips the sign
    auto two = make_layout({0.0, 0.5}, {0.0, 0.0});
    auto a2 = channel::array_response(two, 0.0, 0.0, 1.0);
    CHECK(a2[0].real() == doctest::Approx(1.0));
    CHECK(a2[1].real() == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(a2[1].imag()) < 1e-12);

    auto four = make_layout({0, 0, 0, 0}, {0, 0, 0, 0});
    auto a4 = channel::array_response(four, 1.1, 0.2, 0.05);
    for (Eigen::Index i = 0; i < 4; ++i) CHECK(a4[i] == Complex(1.0, 0.0));
}

TEST_CASE("array response elements stay unit modulus") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);
    std::uniform_real_distribution<double> angle(-1.5, 1.5);
    for (int rep = 0; rep < 50; ++rep) {
        auto layout = make_layout({coord(rng), coord(rng), coord(rng)},
                                  {coord(rng), coord(rng), coord(rng)});
        auto a = channel::array_response(layout, angle(rng), angle(rng), 0.1);
        for (Eigen::Index i = 0; i < a.size(); ++i) {
            CHECK(std::abs(std::abs(a[i]) - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("array response rejects bad input") {
    auto layout = make_layout({0.0}, {0.0});
    CHECK_THROWS_AS(channel::array_response(layout, 0.0, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(
        channel::array_response(layout, std::numeric_limits<double>::infinity(), 0.0, 0.1),
        std::invalid_argument);
}

TEST_CASE("channel vector scales the response by beta") {
    auto layout = make_layout({0.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
    channel::ChannelParams params;
    params.wavelength = 0.1;

    params.beta = Complex(1.0, 0.0);
    auto h1 = channel::channel_vector(params, layout);
    auto a = channel::array_response(layout, params.theta, params.phi, params.wavelength);
    CHECK((h1 - a).norm() == doctest::Approx(0.0));

    params.beta = Complex(0.0, 0.0);
    CHECK(channel::channel_vector(params, layout).norm() == doctest::Approx(0.0));

    params.beta = Complex(0.0, 2.0);
    auto h2 = channel::channel_vector(params, layout);
    for (Eigen::Index i = 0; i < 3; ++i) {
        CHECK(h2[i].real() == doctest::Approx(0.0));
        CHECK(h2[i].imag() == doctest::Approx(2.0));
    }
    CHECK(h2.squaredNorm() == doctest::Approx(std::norm(params.beta) * 3));
}

TEST_CASE("channel vector is linear in beta") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    auto layout = make_layout({0.1, -0.2, 0.4}, {0.0, 0.3, -0.1});
    channel::ChannelParams params;
    params.theta = 0.4;
    params.phi = -0.9;
    params.wavelength = 0.1;
    for (int rep = 0; rep < 20; ++rep) {
        params.beta = Complex(unif(rng), unif(rng));
        const Complex scale(unif(rng), unif(rng));
        auto base = channel::channel_vector(params, layout);
        channel::ChannelParams scaled = params;
        scaled.beta *= scale;
        auto h = channel::channel_vector(scaled, layout);
        CHECK((h - scale * base).cwiseAbs().maxCoeff() <= 1e-12 * h.cwiseAbs().maxCoeff() + 1e-15);
    }
}

TEST_CASE("cost hata path loss") {
    CHECK(channel::cost_hata_pl_db(1000.0) == doctest::Approx(139.1));
    CHECK(channel::cost_hata_pl_db(100.0) == doctest::Approx(103.88));
    CHECK(channel::cost_hata_pl_db(10.0) == doctest::Approx(68.66));
    CHECK_THROWS_AS(channel::cost_hata_pl_db(0.0), std::invalid_argument);
    CHECK_THROWS_AS(channel::cost_hata_pl_db(-5.0), std::invalid_argument);
}

TEST_CASE("effective gain matches the naive sum and honors Cauchy-Schwarz") {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXcd q(4), h(4);
        for (int i = 0; i < 4; ++i) {
            q[i] = Complex(gauss(rng), gauss(rng));
            h[i] = Complex(gauss(rng), gauss(rng));
        }
        q.normalize();
        Complex naive(0.0, 0.0);
        for (int i = 0; i < 4; ++i) naive += std::conj(q[i]) * h[i];
        const double expected = std::norm(naive);
        const double got = channel::effective_gain(q, h);
        CHECK(std::abs(got - expected) <= 1e-12 * std::max(1.0, expected));
    }

    Eigen::VectorXcd h(3);
    h << Complex(1, 1), Complex(0, -2), Complex(0.5, 0);
    Eigen::VectorXcd aligned = h.normalized();
    CHECK(channel::effective_gain(aligned, h) == doctest::Approx(h.squaredNorm()));

    Eigen::VectorXcd perp(3);
    perp << Complex(0, 2), Complex(1, 1), Complex(0, 0);
    perp -= (h.dot(perp) / h.squaredNorm()) * h;
    perp.normalize();
    CHECK(channel::effective_gain(perp, h) <= 1e-18);
}

TEST_CASE("effective gain preconditions") {
    Eigen::VectorXcd q(2), h(3);
    q << Complex(1, 0), Complex(0, 0);
    h << Complex(1, 0), Complex(0, 0), Complex(0, 0);
    CHECK_THROWS_AS(channel::effective_gain(q, h), std::invalid_argument);
    Eigen::VectorXcd q3 = Eigen::VectorXcd::Zero(3);
    q3[0] = Complex(2.0, 0.0);
    CHECK_THROWS_AS(channel::effective_gain(q3, h), std::invalid_argument);
}

TEST_CASE("max gain bound dominates random beamformers and is attained by alignment") {
    channel::SampleConfig cfg;
    cfg.n_antennas = 4;
    auto channels = channel::sample_channels(3, 2, cfg);
    std::mt19937_64 rng(23);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (const auto& cr : channels) {
        const double bound = channel::max_gain_bound(cr.params.beta, cfg.n_antennas);
        for (int t = 0; t < 1000; ++t) {
            Eigen::VectorXcd q(cfg.n_antennas);
            for (int i = 0; i < cfg.n_antennas; ++i) q[i] = Complex(gauss(rng), gauss(rng));
            q.normalize();
            CHECK(channel::effective_gain(q, cr.h) <= bound * (1.0 + 1e-12));
        }
        const auto a = channel::array_response(cr.layout, cr.params.theta, cr.params.phi,
                                               cr.params.wavelength);
        const Eigen::VectorXcd q = a / std::sqrt(double(cfg.n_antennas));
        CHECK(channel::effective_gain(q, cr.h) == doctest::Approx(bound).epsilon(1e-9));
    }
    CHECK(channel::max_gain_bound(Complex(0.0, 2.0), 4) == doctest::Approx(16.0));
}

TEST_CASE("min distance check") {
    auto ok = make_layout({0.0}, {0.0}, 0.5, 0.5);
    CHECK(channel::min_distance_ok(ok));

    auto close_x = make_layout({0.0, 0.25}, {0.0, 1.0}, 0.5, 0.5);
    CHECK_FALSE(channel::min_distance_ok(close_x));

    auto boundary = make_layout({0.0, 0.5}, {0.0, 0.5}, 0.5, 0.5);
    CHECK(channel::min_distance_ok(boundary));

    auto outside = make_layout({-11.0}, {0.0}, 0.1, 0.1);
    CHECK_FALSE(channel::min_distance_ok(outside));
}

TEST_CASE("sample_channels is deterministic and honors the variance law") {
    channel::SampleConfig cfg;
    cfg.n_antennas = 2;
    cfg.model = channel::ChannelModel::kRayleigh;

    auto a = channel::sample_channels(42, 5, cfg);
    auto b = channel::sample_channels(42, 5, cfg);
    REQUIRE(a.size() == 5);
    for (std::size_t u = 0; u < a.size(); ++u) {
        CHECK(a[u].distance_m == b[u].distance_m);
        CHECK((a[u].h - b[u].h).norm() == 0.0);
    }
    CHECK(channel::sample_channels(7, 0, cfg).empty());

    // Monte-Carlo moment check at a pinned distance
    cfg.d_min_m = 50.0;
    cfg.d_max_m = 50.0;
    const double pl_db = channel::cost_hata_pl_db(50.0) - cfg.pl_offset_db;
    const double pl_lin = std::pow(10.0, pl_db / 10.0);
    const double want = 1.0 / pl_lin;  // per-component complex variance

    const int n = 100000;
    auto draws = channel::sample_channels(99, n / 2, cfg);
    double acc = 0.0;
    for (const auto& cr : draws) acc += std::norm(cr.h[0]) + std::norm(cr.h[1]);
    const double emp = acc / n;
    const double band = 3.0 * want * std::sqrt(1.0 / n);  // |h_i|^2 is exponential(1/want)
    CHECK(std::abs(emp - want) <= band);

    // LoS mode: same law for the scalar path gain
    cfg.model = channel::ChannelModel::kLos;
    auto los = channel::sample_channels(123, n, cfg);
    acc = 0.0;
    for (const auto& cr : los) acc += std::norm(cr.params.beta);
    CHECK(std::abs(acc / n - want) <= band);
}

TEST_CASE("los channel refreshes after layout edits") {
    channel::SampleConfig cfg;
    cfg.n_antennas = 3;
    auto channels = channel::sample_channels(1, 1, cfg);
    auto& cr = channels.front();
    const auto before = cr.h;
    cr.layout.x[1] += cfg.wavelength / 3.0;
    cr.refresh();
    CHECK((cr.h - before).norm() > 0.0);
    const auto expect = channel::channel_vector(cr.params, cr.layout);
    CHECK((cr.h - expect).norm() == 0.0);
    CHECK(cr.h.squaredNorm() ==
          doctest::Approx(std::norm(cr.params.beta) * 3).epsilon(1e-12));
}
