#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <string_view>

#include "otafl/baselines.hpp"
#include "otafl/oracles.hpp"
#include "otafl/pdd.hpp"

using namespace otafl;
using Complex = std::complex<double>;
using Eigen::VectorXcd;
using Eigen::VectorXd;

TEST_CASE("element pairs") {
    CHECK(pdd::element_pairs(1).empty());
    auto p3 = pdd::element_pairs(3);
    REQUIRE(p3.size() == 3);
    CHECK(p3[0] == std::pair<int, int>{0, 1});
    CHECK(p3[2] == std::pair<int, int>{1, 2});
}

TEST_CASE("initial state is residual-free") {
    auto problem = oracles::toy_problem(5, 3, 11);
    auto state = pdd::initial_state(problem);
    CHECK(pdd::residual_inf_norm(state, problem) <= 1e-9);
    CHECK(std::abs(state.q.norm() - 1.0) <= 1e-9);
    for (const auto& b : state.b) {
        for (Eigen::Index i = 0; i < b.size(); ++i) CHECK(std::abs(std::abs(b[i]) - 1.0) <= 1e-12);
    }

    // with zero duals the penalty vanishes at a consistent state
    auto duals = pdd::zero_duals(problem, pdd::PddConfig{});
    const double total = problem.total_samples();
    const double expected = (4.0 / 25.0) * (total - state.eta_hat) * (total - state.eta_hat) +
                            state.eta;
    CHECK(pdd::augmented_lagrangian(state, duals, problem) ==
          doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("augmented lagrangian penalizes a perturbed coupling quadratically") {
    auto problem = oracles::toy_problem(3, 2, 13);
    auto state = pdd::initial_state(problem);
    auto duals = pdd::zero_duals(problem, pdd::PddConfig{});
    const double base = pdd::augmented_lagrangian(state, duals, problem);
    const double delta = 0.3;
    state.e_tld[1] += delta;  // breaks e - e~ and eta^ - sum e~ S
    const double bumped = pdd::augmented_lagrangian(state, duals, problem);
    const double s1 = problem.samples[1];
    const double expected =
        base + (delta * delta + delta * s1 * delta * s1) / (2.0 * duals.kappa);
    CHECK(bumped == doctest::Approx(expected).epsilon(1e-12));
    CHECK(pdd::residual_inf_norm(state, problem) ==
          doctest::Approx(std::max(delta, delta * s1)));
}

TEST_CASE("residual vector double entry") {
    auto problem = oracles::toy_problem(4, 2, 17);
    for (int rep = 0; rep < 10; ++rep) {
        auto state = oracles::random_state(problem, 100 + rep);
        const VectorXd res = pdd::residual_vector(state, problem);
        double manual = 0.0;
        for (Eigen::Index i = 0; i < res.size(); ++i) manual = std::max(manual, std::abs(res[i]));
        CHECK(pdd::residual_inf_norm(state, problem) == doctest::Approx(manual));
    }
}

TEST_CASE("update_e consensus fixed points") {
    auto problem = oracles::toy_problem(3, 2, 19);
    auto state = pdd::initial_state(problem);
    auto duals = pdd::zero_duals(problem, pdd::PddConfig{});

    state.e_tld.setOnes();
    state.e_hat.setOnes();
    state.e_bar.setOnes();
    pdd::update_e(state, duals, problem);
    for (int u = 0; u < 3; ++u) CHECK(state.e[u] == doctest::Approx(1.0));

    state.e_tld.setZero();
    state.e_hat.setZero();
    state.e_bar.setZero();
    pdd::update_e(state, duals, problem);
    for (int u = 0; u < 3; ++u) CHECK(state.e[u] == doctest::Approx(0.0));
}

TEST_CASE("block updates keep a fully consistent zero-dual state fixed") {
    auto problem = oracles::toy_problem(4, 2, 23);
    pdd::PddConfig cfg;
    cfg.kappa0 = 1e-7;  // the linear objective pressure on eta scales with kappa
    auto duals = pdd::zero_duals(problem, cfg);
    auto state = pdd::initial_state(problem);
    auto snapshot = state;

    pdd::update_e(state, duals, problem);
    pdd::update_block1_aux(state, duals, problem);
    pdd::project_q_tilde(state, duals, problem);
    pdd::update_b_bcd(state, duals, problem, 1);
    pdd::update_e_aux(state, duals, problem);

    CHECK((state.e - snapshot.e).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((state.alpha - snapshot.alpha).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((state.alpha_hat - snapshot.alpha_hat).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(std::abs(state.c - snapshot.c) <= 1e-9 * (1.0 + snapshot.c));
    CHECK(std::abs(state.eta_tld - snapshot.eta_tld) <= 1e-9 * (1.0 + snapshot.eta_tld));
    CHECK((state.gamma - snapshot.gamma).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((state.q_tld - snapshot.q_tld).cwiseAbs().maxCoeff() <= 1e-9);
    for (int u = 0; u < 4; ++u) {
        CHECK((state.b[u] - snapshot.b[u]).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK((state.diff_x[u] - snapshot.diff_x[u]).cwiseAbs().maxCoeff() <= 1e-9);
    }
    CHECK((state.e_tld - snapshot.e_tld).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((state.e_hat - snapshot.e_hat).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((state.e_bar - snapshot.e_bar).cwiseAbs().maxCoeff() <= 1e-9);

    // block2/block3 at the full-selection consistent point (eta^ = S_total)
    pdd::update_block2(state, duals, problem);
    CHECK((state.alpha_tld - snapshot.alpha_tld).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(std::abs(state.eta_hat - snapshot.eta_hat) <= 1e-8 * (1.0 + snapshot.eta_hat));
    CHECK(std::abs(state.eta - snapshot.eta) <= 1e-6 * (1.0 + std::abs(snapshot.eta)));
    pdd::update_positions(state, duals, problem);
    pdd::update_block3(state, duals, problem);
    CHECK(std::abs(state.eta_bar - snapshot.eta_bar) <= 1e-8 * (1.0 + snapshot.eta_bar));
    CHECK(std::abs(state.c_tld - snapshot.c_tld) <= 1e-8 * (1.0 + snapshot.c_tld));
}

TEST_CASE("project_q_tilde") {
    VectorXcd q(2);
    q << Complex(3.0, 0.0), Complex(4.0, 0.0);
    VectorXcd zero_dual = VectorXcd::Zero(2);
    auto qt = pdd::project_q_tilde(q, zero_dual, 0.5);
    CHECK(qt[0].real() == doctest::Approx(0.6));
    CHECK(qt[1].real() == doctest::Approx(0.8));

    VectorXcd unit(2);
    unit << Complex(0.0, 1.0), Complex(0.0, 0.0);
    auto same = pdd::project_q_tilde(unit, zero_dual, 1.0);
    CHECK((same - unit).norm() <= 1e-15);

    VectorXcd cancel(1);
    cancel << Complex(1.0, 0.0);
    VectorXcd dual(1);
    dual << Complex(-2.0, 0.0);
    CHECK_THROWS_AS(pdd::project_q_tilde(cancel, dual, 0.5), DegenerateProjectionError);

    // minimizes distance against random unit candidates
    std::mt19937_64 rng(5);
    std::normal_distribution<double> gauss(0.0, 1.0);
    VectorXcd qr(3), lam(3);
    for (int i = 0; i < 3; ++i) {
        qr[i] = Complex(gauss(rng), gauss(rng));
        lam[i] = Complex(gauss(rng), gauss(rng));
    }
    auto best = pdd::project_q_tilde(qr, lam, 0.7);
    const VectorXcd target = qr + 0.7 * lam;
    const double best_dist = (target - best).norm();
    for (int t = 0; t < 1000; ++t) {
        VectorXcd cand(3);
        for (int i = 0; i < 3; ++i) cand[i] = Complex(gauss(rng), gauss(rng));
        cand.normalize();
        CHECK((target - cand).norm() >= best_dist - 1e-12);
    }
}

TEST_CASE("bcd sweep never increases its subproblem objective") {
    auto problem = oracles::toy_problem(3, 3, 29);
    for (int rep = 0; rep < 100; ++rep) {
        auto state = oracles::random_state(problem, 500 + rep);
        auto duals = oracles::random_duals(problem, 900 + rep, 0.5);
        auto sub_objective = [&](const pdd::PddState& s) {
            double v = 0.0;
            for (int u = 0; u < problem.n_users(); ++u) {
                const auto& prm = problem.channels[u].params;
                channel::AntennaLayout layout = problem.channels[u].layout;
                layout.x = s.pos_x[u];
                layout.y = s.pos_y[u];
                const VectorXcd a =
                    channel::array_response(layout, prm.theta, prm.phi, prm.wavelength);
                v += (a - s.b[u] + duals.kappa * duals.l_b[u]).squaredNorm();
                const Complex mix = s.q.dot(VectorXcd(prm.beta * s.b[u]));
                v += std::norm(s.gamma[u] - mix + duals.kappa * duals.l_gamma[u]);
            }
            return v;
        };
        const double before = sub_objective(state);
        pdd::update_b_bcd(state, duals, problem, 1);
        const double after = sub_objective(state);
        CHECK(after <= before + 1e-9 * (1.0 + std::abs(before)));
        for (int u = 0; u < problem.n_users(); ++u) {
            for (Eigen::Index i = 0; i < 3; ++i) {
                CHECK(std::abs(std::abs(state.b[u][i]) - 1.0) <= 1e-9);
            }
        }
    }
}

TEST_CASE("position update beats a fine grid and keeps interior gradients flat") {
    auto problem = oracles::toy_problem(2, 2, 31);
    for (int rep = 0; rep < 20; ++rep) {
        auto state = oracles::random_state(problem, 700 + rep);
        auto duals = oracles::random_duals(problem, 1100 + rep, 0.6);
        auto updated = state;
        pdd::update_positions(updated, duals, problem);

        const auto region = problem.channels[0].layout.region;
        double grid_best = std::numeric_limits<double>::infinity();
        for (int a = 0; a <= 100; ++a) {
            for (int b = 0; b <= 100; ++b) {
                const double x = region.x_min + (region.x_max - region.x_min) * a / 100.0;
                const double y = region.y_min + (region.y_max - region.y_min) * b / 100.0;
                grid_best = std::min(grid_best,
                                     pdd::position_objective(state, duals, problem, 0, 0, x, y));
            }
        }
        const double got = pdd::position_objective(state, duals, problem, 0, 0,
                                                   updated.pos_x[0][0], updated.pos_y[0][0]);
        CHECK(got <= grid_best + 1e-9);

        // interior solutions are first-order stationary on J
        const double x0 = updated.pos_x[0][0];
        const double y0 = updated.pos_y[0][0];
        const double h = 1e-7;
        const bool interior = x0 > region.x_min + 1e-6 && x0 < region.x_max - 1e-6 &&
                              y0 > region.y_min + 1e-6 && y0 < region.y_max - 1e-6;
        if (interior) {
            const double j0 = pdd::position_objective(state, duals, problem, 0, 0, x0, y0);
            const double gx = (pdd::position_objective(state, duals, problem, 0, 0, x0 + h, y0) -
                               pdd::position_objective(state, duals, problem, 0, 0, x0 - h, y0)) /
                              (2 * h);
            const double gy = (pdd::position_objective(state, duals, problem, 0, 0, x0, y0 + h) -
                               pdd::position_objective(state, duals, problem, 0, 0, x0, y0 - h)) /
                              (2 * h);
            CHECK(std::abs(gx) <= 1e-4 * (1.0 + std::abs(j0)));
            CHECK(std::abs(gy) <= 1e-4 * (1.0 + std::abs(j0)));
        }
    }
}

TEST_CASE("dual update applies residual ascent or penalty shrink") {
    auto problem = oracles::toy_problem(3, 2, 37);
    auto state = pdd::initial_state(problem);
    pdd::PddConfig cfg;
    auto duals = pdd::zero_duals(problem, cfg);

    // consistent state: residual 0 <= eps, duals stay zero
    pdd::update_duals_and_penalty(duals, state, problem, 1e-3);
    CHECK(duals.l_e_tld.cwiseAbs().maxCoeff() == 0.0);
    CHECK(duals.kappa == doctest::Approx(cfg.kappa0));

    // now violate one coupling and pass a loose tolerance: ascent step
    auto bumped = state;
    bumped.c += 0.3;
    duals.kappa = 0.5;
    pdd::update_duals_and_penalty(duals, bumped, problem, 10.0);
    CHECK(duals.l_c_tld == doctest::Approx(0.6));  // lambda += r / kappa
    CHECK(duals.kappa == doctest::Approx(0.5));

    // tight tolerance: penalty shrink, multipliers unchanged
    pdd::update_duals_and_penalty(duals, bumped, problem, 1e-9);
    CHECK(duals.l_c_tld == doctest::Approx(0.6));
    CHECK(duals.kappa == doctest::Approx(0.5 * duals.c_pen));
}

TEST_CASE("layout repair enforces spacing with minimal sorted shifts") {
    channel::AntennaLayout layout;
    layout.region = {0.0, 1.0, 0.0, 1.0};
    layout.v_x = 0.2;
    layout.v_y = 0.2;
    layout.x = VectorXd(3);
    layout.y = VectorXd(3);
    layout.x << 0.50, 0.45, 0.41;
    layout.y << 0.10, 0.40, 0.70;
    const double shift = pdd::repair_layout(layout);
    CHECK(channel::min_distance_ok(layout));
    CHECK(shift > 0.0);
    CHECK(shift <= 0.45);

    // already feasible: untouched
    channel::AntennaLayout ok = layout;
    const auto x_before = ok.x;
    CHECK(pdd::repair_layout(ok) == doctest::Approx(0.0));
    CHECK((ok.x - x_before).norm() == 0.0);
}

TEST_CASE("solver: single user, single antenna analytic optimum") {
    auto problem = oracles::toy_problem(1, 1, 41);
    pdd::PddConfig cfg;
    auto sol = pdd::solve(cfg, problem);
    REQUIRE(sol.selection.size() == 1);
    CHECK(sol.selection.e[0] == doctest::Approx(1.0));
    CHECK(std::abs(sol.q.norm() - 1.0) <= 1e-9);
    const double gain = std::norm(problem.channels[0].params.beta);
    const double expect = problem.sigma_n2 / (problem.p_a * gain);
    CHECK(sol.r_value == doctest::Approx(expect).epsilon(1e-6));
    CHECK(sol.residual_inf <= cfg.eps_outer);
}

TEST_CASE("solver: augmented lagrangian is monotone within sweeps") {
    int violations = 0;
    double worst = 0.0;
    for (int inst = 0; inst < 10; ++inst) {
        auto problem = oracles::toy_problem(4, 2, 900 + inst);
        pdd::PddConfig cfg;
        cfg.collect_trace = false;
        double last = std::numeric_limits<double>::infinity();
        bool first_in_sweep = true;
        auto observer = [&](const char* label, double al) {
            if (std::string_view(label) == "e") first_in_sweep = true;  // sweep starts
            if (!first_in_sweep && al > last + 1e-9 * (1.0 + std::abs(last))) {
                ++violations;
                worst = std::max(worst, al - last);
            }
            last = al;
            first_in_sweep = false;
        };
        pdd::solve(cfg, problem, observer);
    }
    CHECK(violations == 0);
    CHECK(worst <= 1e-9);
}

TEST_CASE("solver: matches exhaustive selection oracle within 10 percent") {
    // fixed channels (no positioning) make the solver and the oracle face
    // the same problem
    for (int inst = 0; inst < 8; ++inst) {
        const int n_users = 3 + inst % 6;
        auto problem = oracles::toy_problem(n_users, 2, 1300 + inst,
                                            channel::ChannelModel::kRayleigh);
        pdd::PddConfig cfg;
        cfg.collect_trace = false;
        auto sol = pdd::solve(cfg, problem);
        CHECK(sol.residual_inf <= cfg.eps_outer);

        std::vector<VectorXcd> hs;
        for (const auto& cr : problem.channels) hs.push_back(cr.h);
        auto oracle = baselines::exhaustive_selection_oracle(
            hs, problem.samples, baselines::QRule::kEigen, problem.sigma_n2, problem.p_a);
        CHECK(sol.r_value <= 1.10 * oracle.r_value + 1e-12);
    }
}

TEST_CASE("solver: reported r matches comm_penalty at the returned artifacts") {
    auto problem = oracles::toy_problem(5, 2, 61);
    pdd::PddConfig cfg;
    auto sol = pdd::solve(cfg, problem);
    std::vector<VectorXcd> hs;
    for (int u = 0; u < problem.n_users(); ++u) {
        hs.push_back(channel::channel_vector(problem.channels[u].params, sol.layouts[u]));
    }
    const double r = objective::comm_penalty(sol.selection, sol.q, hs, problem.sigma_n2,
                                             problem.p_a);
    CHECK(sol.r_value == doctest::Approx(r).epsilon(1e-12));

    // feasibility at exit
    CHECK(std::abs(sol.q.norm() - 1.0) <= 1e-9);
    CHECK(sol.selection.binary);
    for (const auto& layout : sol.layouts) CHECK(channel::min_distance_ok(layout));
}

TEST_CASE("solver: deterministic trace") {
    auto problem = oracles::toy_problem(3, 2, 71);
    pdd::PddConfig cfg;
    auto a = pdd::solve(cfg, problem);
    auto b = pdd::solve(cfg, problem);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        CHECK(a.trace[i].aug_lagrangian == b.trace[i].aug_lagrangian);
        CHECK(a.trace[i].residual_inf == b.trace[i].residual_inf);
    }
    CHECK((a.q - b.q).norm() == 0.0);
    CHECK(a.r_value == b.r_value);
    CHECK(a.residual_inf <= cfg.eps_outer);
}
