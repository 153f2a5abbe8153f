#include <doctest.h>

#include <cmath>
#include <random>

#include "nvmux/errors.hpp"
#include "nvmux/probe.hpp"

using namespace nvmux;

namespace {
double deg(double d) { return d * M_PI / 180.0; }
}

TEST_CASE("axis_from_angles follows the physics convention") {
    const Vec3 pole = axis_from_angles(0, 0).unit();
    CHECK(pole.z() == doctest::Approx(1.0));
    CHECK(std::abs(pole.x()) < 1e-15);

    const Vec3 eq = axis_from_angles(90, 0).unit();
    CHECK(eq.x() == doctest::Approx(1.0));
    CHECK(std::abs(eq.z()) < 1e-15);

    const Vec3 tip = axis_from_angles(41, 94).unit();
    CHECK(tip.z() == doctest::Approx(0.7547).epsilon(1e-4));
    CHECK(tip.x() == doctest::Approx(std::sin(deg(41)) * std::cos(deg(94))).epsilon(1e-12));
    CHECK(tip.y() == doctest::Approx(std::sin(deg(41)) * std::sin(deg(94))).epsilon(1e-12));
}

TEST_CASE("non-finite angles are rejected") {
    CHECK_THROWS_AS(SensorAxis(NAN, 0), InvalidArgument);
    CHECK_THROWS_AS(SensorAxis(0, INFINITY), InvalidArgument);
}

TEST_CASE("negative theta folds to the equivalent representation") {
    const SensorAxis a(-84, -161);
    CHECK(a.theta_deg() == doctest::Approx(84));
    CHECK(a.phi_deg() == doctest::Approx(19));
    // Same unit vector as the literal spherical formula with negative theta.
    const Vec3 literal(std::sin(deg(-84)) * std::cos(deg(-161)), std::sin(deg(-84)) * std::sin(deg(-161)),
                       std::cos(deg(-84)));
    CHECK((a.unit() - literal).norm() < 1e-12);
}

TEST_CASE("unit vectors are normalized and round-trip") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> th(0.5, 179.5), ph(-179.5, 179.5);
    for (int i = 0; i < 500; ++i) {
        const SensorAxis a(th(rng), ph(rng));
        CHECK(std::abs(a.unit().norm() - 1.0) < 1e-12);
        const SensorAxis b = SensorAxis::from_vector(3.7 * a.unit());
        CHECK(std::abs(b.theta_deg() - a.theta_deg()) < 1e-9);
        CHECK(std::abs(std::remainder(b.phi_deg() - a.phi_deg(), 360.0)) < 1e-9);
    }
}

TEST_CASE("project_field") {
    const Vec3 bz(0, 0, 1e-3);
    CHECK(project_field(axis_from_angles(0, 0), bz) == doctest::Approx(1e-3));
    CHECK(std::abs(project_field(axis_from_angles(90, 0), bz)) < 1e-18);
    CHECK(project_field(axis_from_angles(41, 94), bz) == doctest::Approx(0.7547e-3).epsilon(1e-4));
    CHECK_THROWS_AS(project_field(axis_from_angles(0, 0), Vec3(NAN, 0, 0)), InvalidArgument);
}

TEST_CASE("project_field is linear") {
    const SensorAxis e(33, -71);
    const Vec3 b1(1e-3, -2e-4, 5e-4), b2(-3e-4, 7e-4, 1e-4);
    const double a = 2.5, b = -0.75;
    const double lhs = project_field(e, a * b1 + b * b2);
    const double rhs = a * project_field(e, b1) + b * project_field(e, b2);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(rhs));
}

TEST_CASE("correlation factor m") {
    const SensorAxis e1(41, 94), e2(-84, -161);
    const Vec3 bz(0, 0, 1e-6);
    CHECK(correlation_factor_m(e1, e1, Vec3(1e-6, 2e-6, -3e-7)) == doctest::Approx(1.0));
    CHECK(correlation_factor_m(e1, e2, bz) == doctest::Approx(std::cos(deg(84)) / std::cos(deg(41))).epsilon(1e-12));
    CHECK(correlation_factor_m(e1, e2, bz) == doctest::Approx(0.1385).epsilon(1e-3));

    // e2 perpendicular to Bc
    CHECK(std::abs(correlation_factor_m(SensorAxis(0, 0), SensorAxis(90, 0), bz)) < 1e-15);

    const Vec3 bc(2e-6, -1e-6, 4e-6);
    CHECK(correlation_factor_m(e1, e2, -17.0 * bc) == doctest::Approx(correlation_factor_m(e1, e2, bc)));
    CHECK(correlation_factor_m(e1, e2, bc) * correlation_factor_m(e2, e1, bc) == doctest::Approx(1.0));

    CHECK_THROWS_AS(correlation_factor_m(SensorAxis(90, 0), e2, bz), DegenerateProjection);
    CHECK_NOTHROW(correlation_factor_m(e1, e2, Vec3(0, 0, 1e-12), 1e-20));
    CHECK_THROWS_AS(correlation_factor_m(e1, e2, Vec3(0, 0, 1e-12), 1e-9), DegenerateProjection);
}

TEST_CASE("sensor invariants") {
    NvSensor s;
    s.photon_yield = 0.1;
    s.contrast = 0.2;
    s.dephasing = Dephasing::fixed(0.7);
    CHECK_NOTHROW(s.validate());
    CHECK(s.readout_contrast(250e-9) == doctest::Approx(0.1 * 0.2 * std::exp(-0.7)));
    CHECK(s.readout_contrast(250e-9) <= s.photon_yield);

    NvSensor bad = s;
    bad.photon_yield = 0.0;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = s;
    bad.contrast = 1.2;
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
    bad = s;
    bad.dephasing = Dephasing::fixed(-0.1);
    CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}

TEST_CASE("power-law dephasing is nondecreasing") {
    const Dephasing d = Dephasing::power_law(300e-9, 2.0);
    CHECK(d.at(0.0) == 0.0);
    CHECK(d.at(300e-9) == doctest::Approx(1.0));
    double prev = 0.0;
    for (double tau = 1e-9; tau < 2e-6; tau *= 1.5) {
        CHECK(d.at(tau) >= prev);
        prev = d.at(tau);
    }
}

TEST_CASE("probe separation is the position difference") {
    ProbePair p;
    p.first.position_nm = Vec3(0, 0, 47);
    p.second.position_nm = Vec3(-52, -96, 58);
    CHECK(p.separation() == Vec3(-52, -96, 11));
}
