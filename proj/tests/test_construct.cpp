#include <catch2/catch_amalgamated.hpp>

#include "ldpcl/construct.hpp"

#include "oracles.hpp"
#include "reference_data.hpp"
#include "test_util.hpp"

#include <cmath>
#include <random>

using namespace ldpcl;
using namespace testutil;

namespace {

double max_coeff_diff(const DegreePoly& a, const DegreePoly& b) {
    int lo = std::min(a.min_degree(), b.min_degree());
    int hi = std::max(a.max_degree(), b.max_degree());
    double m = 0.0;
    for (int d = lo; d <= hi; ++d)
        m = std::max(m, std::abs(a.coeff(d) - b.coeff(d)));
    return m;
}

// additive gap of a built component pair at its target threshold
double poly_gap(const std::pair<DegreePoly, DegreePoly>& p, double eps) {
    return p.second.integral01() / p.first.integral01() - eps;
}

} // namespace

TEST_CASE("tornado_layer coefficients and integrals") {
    SECTION("harmonic numbers") {
        for (int D : {1, 2, 10, 100, 800})
            REQUIRE(harmonic_number(D) ==
                    Catch::Approx(oracle::harmonic(D)).epsilon(1e-14));
        REQUIRE_THROWS_AS(harmonic_number(0), std::invalid_argument);
    }

    SECTION("D=1 variable side is a single degree-2 atom") {
        auto [lam, rho] = tornado_layer({1, 0.05});
        REQUIRE(lam.min_degree() == 2);
        REQUIRE(lam.max_degree() == 2);
        REQUIRE(lam.coeff(2) == Catch::Approx(1.0).margin(1e-14));
        (void)rho;
    }

    SECTION("harmonic weights on degrees 2..D+1") {
        int D = 4;
        double H = harmonic_number(D);
        auto [lam, rho] = tornado_layer({D, 0.3});
        for (int i = 1; i <= D; ++i)
            REQUIRE(lam.coeff(i + 1) ==
                    Catch::Approx(1.0 / (H * i)).margin(1e-14));
        (void)rho;
    }

    SECTION("lambda integral in closed form") {
        for (int D : {1, 2, 5, 10, 100}) {
            auto [lam, rho] = tornado_layer({D, 0.2});
            REQUIRE(lam.integral01() ==
                    Catch::Approx(oracle::tornado_lambda_integral(D))
                        .epsilon(1e-13));
            (void)rho;
        }
        auto [lam2, rho2] = tornado_layer({2, 0.05});
        REQUIRE(lam2.integral01() == Catch::Approx(4.0 / 9.0).epsilon(1e-13));
        REQUIRE(average_degree(LayerSpec(lam2, rho2, 0.0)) ==
                Catch::Approx(2.25).epsilon(1e-12));
    }

    SECTION("Poisson check side via coefficient ratios") {
        double eps = 0.05;
        auto [lam, rho] = tornado_layer({1, eps});
        double alpha = harmonic_number(1) / eps; // 20
        for (int d : {10, 20, 30})
            REQUIRE(rho.coeff(d + 1) / rho.coeff(d) ==
                    Catch::Approx(alpha / d).epsilon(1e-12));
        (void)lam;
    }

    SECTION("large alpha stays finite in log space") {
        auto [lam, rho] = tornado_layer({10, 0.005});
        double alpha = harmonic_number(10) / 0.005; // ~586
        int d = int(alpha);
        REQUIRE(rho.coeff(d + 1) / rho.coeff(d) ==
                Catch::Approx(alpha / d).epsilon(1e-10));
        REQUIRE(rho.coeff(d) > 0.0);
        (void)lam;
    }

    SECTION("parameter validation") {
        REQUIRE_THROWS_AS(tornado_layer({0, 0.5}), std::invalid_argument);
        REQUIRE_THROWS_AS(tornado_layer({1, 0.0}), std::invalid_argument);
        REQUIRE_THROWS_AS(tornado_layer({1, 1.0}), std::invalid_argument);
        REQUIRE_THROWS_AS(tornado_layer({1, 0.5, 1e-6}), std::invalid_argument);
        REQUIRE_NOTHROW(tornado_layer({1, 0.5, 1e-7}));
    }
}

TEST_CASE("tornado thresholds and gaps") {
    SECTION("single-layer threshold lands on the target") {
        for (auto [D, eps] : std::vector<std::pair<int, double>>{
                 {1, 0.05}, {2, 0.1}, {10, 0.2}, {5, 0.5}, {100, 0.2}}) {
            auto pair = tornado_layer({D, eps});
            double thr = threshold_1d(pair.first, pair.second).epsilon_star;
            INFO("D " << D << " eps " << eps);
            REQUIRE(std::abs(thr - eps) <= 1e-3);
            REQUIRE(thr >= eps * (1.0 - 1e-3));
        }
    }

    SECTION("built-polynomial gap matches the closed form") {
        for (auto [D, eps] : std::vector<std::pair<int, double>>{
                 {1, 0.2}, {3, 0.1}, {10, 0.2}, {100, 0.2}, {800, 0.2}}) {
            auto pair = tornado_layer({D, eps});
            INFO("D " << D << " eps " << eps);
            REQUIRE(poly_gap(pair, eps) ==
                    Catch::Approx(tornado_gap(D, eps)).margin(2e-12));
        }
        REQUIRE(tornado_gap(10, 0.2) == Catch::Approx(0.02).margin(1e-6));
    }

    SECTION("gap is close to eps/D at moderate channel levels") {
        for (int D : {2, 5, 20, 100})
            for (double eps : {0.05, 0.1, 0.2}) {
                INFO("D " << D << " eps " << eps);
                REQUIRE(tornado_gap(D, eps) ==
                        Catch::Approx(eps / D).epsilon(0.02));
            }
    }

    SECTION("type-2 gap column of the trade-off study") {
        for (std::size_t k = 0; k < refdata::kD2.size(); ++k) {
            double ours = tornado_gap(refdata::kD2[k], 0.2);
            INFO("D2 " << refdata::kD2[k]);
            // the first entry was tabulated from a coarser threshold grid
            double tol = k == 0 ? 6e-5 : 5e-8;
            REQUIRE(std::abs(ours - refdata::kDelta2[k]) <= tol);
        }
    }
}

TEST_CASE("checkreg family hits thresholds exactly") {
    for (double t : {0.1, 0.25, 0.35, 0.5, 0.77, 0.9}) {
        auto [lam, rho] = checkreg_layer(t);
        INFO("t " << t);
        REQUIRE(lam.coeff(2) == 1.0);
        REQUIRE(rho.derivative_at_one() == Catch::Approx(1.0 / t).epsilon(1e-12));
        REQUIRE(threshold_1d(lam, rho).epsilon_star ==
                Catch::Approx(t).margin(1e-6));
    }
    // integer 1/t collapses to a single check degree
    auto [lam, rho] = checkreg_layer(0.25);
    REQUIRE(rho.min_degree() == 5);
    REQUIRE(rho.max_degree() == 5);
    (void)lam;
    REQUIRE_THROWS_AS(checkreg_layer(0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(checkreg_layer(1.0), std::invalid_argument);
}

TEST_CASE("construct_bilayer reproduces the capacity-approaching rates") {
    DesignTargets targets({0.05, 0.2});

    SECTION("six anchor points of the rate table") {
        struct Row {
            int d1, d2;
            double rate;
        };
        std::vector<Row> rows = {{1, 1, refdata::kRateD1_1[0]},
                                 {1, 2, refdata::kRateD1_1[1]},
                                 {1, 10, refdata::kRateD1_1[4]},
                                 {1, 100, refdata::kRateD1_1[8]},
                                 {2, 100, refdata::kRateD1_2[8]},
                                 {5, 100, refdata::kRateD1_5[8]}};
        for (const auto& row : rows) {
            auto c = construct_bilayer(targets, tornado_family(row.d1),
                                       tornado_family(row.d2),
                                       Layer2Target::full_eps2);
            INFO("D1 " << row.d1 << " D2 " << row.d2);
            REQUIRE(c.ensemble.layer(1).p0() == 0.25);
            double rate = design_rate(c.ensemble);
            REQUIRE(rate == Catch::Approx(row.rate).margin(1e-9));
            REQUIRE(rate == Catch::Approx(row.rate).margin(1.5e-3));
            REQUIRE(threshold_1d(c.ensemble.layer(0)).epsilon_star ==
                    Catch::Approx(0.05).margin(1e-3));
        }
    }

    SECTION("rate grows with D2 at fixed D1") {
        double prev = 0.0;
        for (int d2 : {1, 2, 5, 10, 100}) {
            auto c = construct_bilayer(targets, tornado_family(1),
                                       tornado_family(d2),
                                       Layer2Target::full_eps2);
            double rate = design_rate(c.ensemble);
            REQUIRE(rate > prev);
            prev = rate;
        }
    }

    SECTION("exact_as designs against the attenuated channel") {
        auto full = construct_bilayer(targets, tornado_family(1),
                                      tornado_family(100),
                                      Layer2Target::full_eps2);
        auto tight = construct_bilayer(targets, tornado_family(1),
                                       tornado_family(100),
                                       Layer2Target::exact_as);
        auto sp = stuck_point(tight.ensemble.layer(0), 0.2);
        REQUIRE(tight.info.component_targets[1] ==
                Catch::Approx(0.2 * sp.a_s).margin(1e-9));
        REQUIRE(tight.info.a_s.size() == 1);
        REQUIRE(tight.info.a_s[0] == Catch::Approx(sp.a_s).margin(1e-9));
        REQUIRE(design_rate(tight.ensemble) > design_rate(full.ensemble));
        // both modes still deliver the global threshold (Construction 1 for
        // exact_as; the conservative variant can only do better)
        REQUIRE(threshold_bilayer(tight.ensemble).epsilon_star ==
                Catch::Approx(0.2).margin(5e-3));
        REQUIRE(threshold_bilayer(full.ensemble).epsilon_star >= 0.2 - 5e-3);
    }

    SECTION("provenance fields") {
        auto c = construct_bilayer(targets, tornado_family(1),
                                   tornado_family(10));
        REQUIRE(c.info.targets == std::vector<double>{0.05, 0.2});
        REQUIRE(c.info.component_targets.size() == 2);
        REQUIRE(c.info.component_targets[0] == 0.05);
        REQUIRE(c.info.p0 == std::vector<double>{0.0, 0.25});
        REQUIRE(c.info.family_names[0] == "tornado(D=1)");
        REQUIRE(c.info.family_names[1] == "tornado(D=10)");
        REQUIRE(c.info.layer2_target == Layer2Target::exact_as);
    }

    SECTION("explicit layer-1 pair equals the family overload") {
        auto a = construct_bilayer(targets, tornado_layer({1, 0.05}),
                                   tornado_family(10));
        auto b = construct_bilayer(targets, tornado_family(1),
                                   tornado_family(10));
        for (int i = 0; i < 2; ++i) {
            REQUIRE(max_coeff_diff(a.ensemble.layer(i).lambda(),
                                   b.ensemble.layer(i).lambda()) == 0.0);
            REQUIRE(max_coeff_diff(a.ensemble.layer(i).rho(),
                                   b.ensemble.layer(i).rho()) == 0.0);
            REQUIRE(a.ensemble.layer(i).p0() == b.ensemble.layer(i).p0());
        }
    }

    SECTION("rejections") {
        // layer 1 tuned to 0.05 cannot serve an eps1 = 0.06 design
        REQUIRE_THROWS_AS(
            construct_bilayer(DesignTargets({0.06, 0.2}),
                              tornado_layer({1, 0.05}), tornado_family(10)),
            std::invalid_argument);
        REQUIRE_THROWS_AS(DesignTargets({0.2, 0.05}), std::invalid_argument);
        REQUIRE_THROWS_AS(DesignTargets({0.05, 0.05}), std::invalid_argument);
        REQUIRE_THROWS_AS(DesignTargets({0.05, 1.0}), std::invalid_argument);
        REQUIRE_THROWS_AS(DesignTargets({}), std::invalid_argument);
        // eps2 under the measured layer-1 threshold leaves nothing to design
        REQUIRE_THROWS_AS(
            construct_bilayer(DesignTargets({0.05, 0.0503}),
                              checkreg_layer(0.0505), checkreg_family()),
            std::invalid_argument);
    }

    SECTION("nearly equal targets mute the second layer") {
        DesignTargets close({0.199, 0.2});
        auto c = construct_bilayer(close, tornado_family(10),
                                   tornado_family(10),
                                   Layer2Target::full_eps2);
        REQUIRE(c.ensemble.layer(1).p0() == Catch::Approx(0.995));
        const LayerSpec& l1 = c.ensemble.layer(0);
        double r1 = 1.0 - l1.rho().integral01() / l1.lambda().integral01();
        REQUIRE(design_rate(c.ensemble) == Catch::Approx(r1).margin(2e-3));
    }
}

TEST_CASE("construct_multilayer prefixes and reductions") {
    SECTION("L=2 equals the bilayer construction") {
        DesignTargets targets({0.05, 0.2});
        auto a = construct_multilayer(
            targets, {tornado_family(2), tornado_family(10)});
        auto b = construct_bilayer(targets, tornado_family(2),
                                   tornado_family(10));
        REQUIRE(design_rate(a.ensemble) == design_rate(b.ensemble));
        REQUIRE(a.info.component_targets == b.info.component_targets);
    }

    SECTION("three-layer prefix thresholds hit their targets") {
        DesignTargets targets({0.05, 0.1, 0.2});
        auto c = construct_multilayer(
            targets,
            {tornado_family(2), tornado_family(10), tornado_family(10)},
            Layer2Target::full_eps2);
        REQUIRE(c.ensemble.size() == 3);
        REQUIRE(c.ensemble.layer(1).p0() == 0.5);
        REQUIRE(c.ensemble.layer(2).p0() == 0.5);
        for (std::size_t i = 1; i <= 3; ++i) {
            double t =
                threshold_multilayer_bisection(c.ensemble, i).epsilon_star;
            INFO("prefix " << i);
            REQUIRE(t == Catch::Approx(targets.thresholds[i - 1]).margin(5e-3));
        }
        auto rep = gap_report(c);
        for (double d : rep.per_layer_gaps) REQUIRE(d >= 0.0);
        REQUIRE(rep.actual_gap <= rep.bound + 1e-9);
    }

    SECTION("family count must match targets") {
        REQUIRE_THROWS_AS(
            construct_multilayer(DesignTargets({0.05, 0.2}),
                                 {tornado_family(1)}),
            std::invalid_argument);
    }
}

TEST_CASE("gap_report bounds and accounting") {
    DesignTargets targets({0.05, 0.2});

    SECTION("worked table row D1=5, D2=100") {
        auto c = construct_bilayer(targets, tornado_family(5),
                                   tornado_family(100),
                                   Layer2Target::full_eps2);
        auto rep = gap_report(c);
        REQUIRE(rep.per_layer_gaps[0] == Catch::Approx(0.01).margin(1e-9));
        REQUIRE(rep.per_layer_gaps[1] == Catch::Approx(0.002).margin(1e-9));
        REQUIRE(rep.p0s == std::vector<double>{0.0, 0.25});
        REQUIRE(rep.bound == Catch::Approx(0.0115).margin(1e-9));
        REQUIRE(rep.actual_gap <= rep.bound + 1e-9);
        // full eps2 telescopes exactly
        REQUIRE(rep.actual_gap == Catch::Approx(rep.bound).margin(1e-9));
        // component thresholds equal targets here, so both entry points agree
        auto rep2 = gap_report(c.ensemble, targets);
        REQUIRE(rep2.bound == Catch::Approx(rep.bound).margin(1e-15));
        REQUIRE(rep2.actual_gap == rep.actual_gap);
    }

    SECTION("exact_as leaves strict slack in the bound") {
        auto c = construct_bilayer(targets, tornado_family(1),
                                   tornado_family(100),
                                   Layer2Target::exact_as);
        auto rep = gap_report(c);
        for (double d : rep.per_layer_gaps) REQUIRE(d >= 0.0);
        REQUIRE(rep.actual_gap <= rep.bound + 1e-9);
        REQUIRE(rep.bound - rep.actual_gap > 1e-4);
    }

    SECTION("idle layer contributes nothing to the bound") {
        auto [lam1, rho1] = tornado_layer({1, 0.05});
        auto [lam2, rho2] = tornado_layer({10, 0.2});
        std::vector<LayerSpec> ls = {LayerSpec(lam1, rho1, 0.0),
                                     LayerSpec(lam2, rho2, 1.0)};
        auto rep = gap_report(Ensemble(ls), targets);
        REQUIRE(rep.bound == Catch::Approx(rep.per_layer_gaps[0]).margin(1e-15));
    }

    SECTION("capacity sequence closes the gap") {
        auto c = construct_bilayer(targets, tornado_family(800),
                                   tornado_family(800),
                                   Layer2Target::full_eps2);
        auto rep = gap_report(c);
        REQUIRE(rep.actual_gap < 2e-3);
        REQUIRE(rep.actual_gap == Catch::Approx(rep.bound).margin(1e-9));
    }

    SECTION("size mismatch rejected") {
        auto c = construct_bilayer(targets, tornado_family(1),
                                   tornado_family(10));
        REQUIRE_THROWS_AS(
            gap_report(c.ensemble, DesignTargets({0.05, 0.1, 0.2})),
            std::invalid_argument);
    }
}

TEST_CASE("average-degree accounting for the complexity comparison") {
    // bilayer (D1=2, D2=10) against the flat D=10 code at eps2
    DesignTargets targets({0.05, 0.2});
    auto c = construct_bilayer(targets, tornado_family(2), tornado_family(10),
                               Layer2Target::full_eps2);
    double d1 = average_degree(c.ensemble.layer(0));
    double d2 = average_degree(c.ensemble.layer(1));
    auto flat = tornado_layer({10, 0.2});
    double d = 1.0 / flat.first.integral01();

    REQUIRE(d1 == Catch::Approx(2.25).epsilon(1e-12));
    REQUIRE(d2 == Catch::Approx(0.75 * 11.0 * oracle::harmonic(10) / 10.0)
                      .epsilon(1e-12));
    REQUIRE(d2 == Catch::Approx(2.41639880952).margin(1e-9));
    REQUIRE(d == Catch::Approx(3.22186507937).margin(1e-9));
    REQUIRE(d2 == Catch::Approx(2.41).margin(0.01));
    REQUIRE(d == Catch::Approx(3.22).margin(0.01));

    double reduction = 100.0 * (d - d1) / d;
    double increase = 100.0 * (d1 + d2 - d) / d;
    REQUIRE(reduction == Catch::Approx(30.1653).margin(1e-3));
    REQUIRE(increase == Catch::Approx(44.8353).margin(1e-3));
}

TEST_CASE("randomized bilayer designs deliver their thresholds") {
    std::mt19937 rng(20240815);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    auto pick_family = [&](double) -> ComponentFamily {
        if (u01(rng) < 0.5) return checkreg_family();
        return tornado_family(1 + int(u01(rng) * 8));
    };
    int built = 0;
    for (int trial = 0; trial < 8; ++trial) {
        double eps1 = 0.03 + 0.27 * u01(rng);
        double eps2 = eps1 + 0.08 + u01(rng) * std::min(0.5, 0.85 - eps1 - 0.08);
        DesignTargets targets({eps1, eps2});
        auto c = construct_bilayer(targets, pick_family(eps1),
                                   pick_family(eps2));
        INFO("trial " << trial << " eps1 " << eps1 << " eps2 " << eps2
                      << " families " << c.info.family_names[0] << ","
                      << c.info.family_names[1]);
        double measured = threshold_bilayer(c.ensemble).epsilon_star;
        REQUIRE(measured == Catch::Approx(eps2).margin(5e-3));
        REQUIRE(threshold_1d(c.ensemble.layer(0)).epsilon_star ==
                Catch::Approx(eps1).margin(1e-3));
        auto rep = gap_report(c);
        REQUIRE(rep.actual_gap <= rep.bound + 1e-9);
        ++built;
    }
    REQUIRE(built == 8);
}
