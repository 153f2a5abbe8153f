#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "nvmux/errors.hpp"
#include "nvmux/fields.hpp"

using namespace nvmux;

namespace {

// Numerical divergence by central differences (coordinates in nm).
template <class F>
double divergence(F&& f, const Vec3& r, double h) {
    double d = 0.0;
    for (int k = 0; k < 3; ++k) {
        Vec3 dr = Vec3::Zero();
        dr[k] = h;
        d += (f(r + dr)[k] - f(r - dr)[k]) / (2.0 * h);
    }
    return d;
}

// Biot-Savart: sheet as a sum of long straight filaments along y,
// each integrated along its length by the midpoint rule.
Vec3 filament_sheet(double width_nm, double current_a, const Vec3& r_nm, int strips, double half_len_nm,
                    int segments) {
    Vec3 b = Vec3::Zero();
    const double di = current_a / strips;
    const double dl = 2.0 * half_len_nm / segments;
    for (int s = 0; s < strips; ++s) {
        const double xs = -0.5 * width_nm + (s + 0.5) * width_nm / strips;
        for (int k = 0; k < segments; ++k) {
            const double ys = -half_len_nm + (k + 0.5) * dl;
            const Vec3 rel = (r_nm - Vec3(xs, ys, 0.0)) * 1e-9;
            const Vec3 dlv(0.0, dl * 1e-9, 0.0);
            b += kMu0 * di / (4.0 * M_PI) * dlv.cross(rel) / std::pow(rel.norm(), 3);
        }
    }
    return b;
}

}  // namespace

TEST_CASE("edge field closed-form features") {
    StripeEdge e;
    e.sheet_moment_t_nm = 1.2566;
    const double z0 = 50.0;
    const Vec3 b0 = edge_field(e, Vec3(0, 0, z0));
    CHECK(b0.z() == 0.0);
    CHECK(b0.x() == doctest::Approx(1.2566 / (2.0 * M_PI * z0)));
    for (double x : {-200.0, -40.0, 7.0, 90.0}) {
        CHECK(edge_field(e, Vec3(x, 3, z0)).x() <= b0.x());
    }
}

TEST_CASE("edge field symmetry and sign") {
    StripeEdge e;
    e.sheet_moment_t_nm = 2.0;
    for (double x : {3.0, 40.0, 300.0}) {
        const Vec3 p = edge_field(e, Vec3(x, 0, 30)), m = edge_field(e, Vec3(-x, 0, 30));
        CHECK(p.x() == doctest::Approx(m.x()));
        CHECK(p.z() == doctest::Approx(-m.z()));
    }
    StripeEdge f = e;
    f.magnetization_sign = -1;
    CHECK((edge_field(f, Vec3(12, 0, 30)) + edge_field(e, Vec3(12, 0, 30))).norm() < 1e-20);
}

TEST_CASE("edge field peak-to-peak width is twice the height") {
    StripeEdge e;
    const double z = 47.0;
    double xmin = 0, xmax = 0, bmin = 1e9, bmax = -1e9;
    for (double x = -300; x <= 300; x += 0.01) {
        const double bz = edge_field(e, Vec3(x, 0, z)).z();
        if (bz < bmin) bmin = bz, xmin = x;
        if (bz > bmax) bmax = bz, xmax = x;
    }
    CHECK(std::abs(xmax - xmin) == doctest::Approx(2.0 * z).epsilon(1e-3));
}

TEST_CASE("edge field matches a half-plane of out-of-plane dipoles") {
    // Film on the x < 0 side carrying moment density sigma z-hat with
    // mu0 sigma = sheet moment. A y-line of z-dipoles at x' gives the 2D
    // dipole field mu0 lambda / (2 pi) (2 (z.rho) rho - z) / rho^4.
    StripeEdge e;
    e.sheet_moment_t_nm = 1.0;
    const Vec3 r(25.0, 0.0, 40.0);
    Vec3 b = Vec3::Zero();
    // x' = -t^2 / (1 - t) style mapping avoided: integrate u = 1/(1 + |x'|) on (0, 1].
    const int n = 200000;
    for (int k = 0; k < n; ++k) {
        const double u = (k + 0.5) / n;
        const double xp = -(1.0 / u - 1.0);
        const double jac = 1.0 / (u * u);
        const Vec3 rho(r.x() - xp, 0.0, r.z());
        const double r2 = rho.squaredNorm();
        const Vec3 dip = (2.0 * rho.z() * rho - r2 * Vec3::UnitZ()) / (r2 * r2);
        b += dip * jac / n / (2.0 * M_PI);
    }
    const Vec3 model = edge_field(e, r);
    CHECK((b - model).norm() < 1e-4 * model.norm());
}

TEST_CASE("edge field requires z > 0") {
    StripeEdge e;
    CHECK_THROWS_AS(edge_field(e, Vec3(0, 0, 0)), OutOfDomain);
    CHECK_THROWS_AS(edge_field(e, Vec3(0, 0, -5)), OutOfDomain);
}

TEST_CASE("wire field closed-form features") {
    FiniteWire w;
    w.width_nm = 700;
    w.direction = Vec3::UnitY();
    w.waveform = CurrentWaveform::dc(1e-3);
    const Vec3 mid = wire_field(w, Vec3(0, 0, 50), 0.0);
    CHECK(mid.z() == 0.0);
    CHECK(std::abs(mid.dot(w.direction)) < 1e-20);

    const Vec3 surface = wire_field(w, Vec3(0, 0, 1e-6), 0.0);
    CHECK(surface.norm() == doctest::Approx(kMu0 * 1e-3 / (2.0 * 700e-9)).epsilon(1e-6));

    for (double x : {-9e4, 2e4, 5e4}) {
        const Vec3 r(x, 0, 60);
        const double rho = std::hypot(x, 60.0) * 1e-9;
        CHECK(wire_field(w, r, 0).norm() == doctest::Approx(kMu0 * 1e-3 / (2.0 * M_PI * rho)).epsilon(0.01));
    }
}

TEST_CASE("wire field agrees with a Biot-Savart filament integral") {
    FiniteWire w;
    w.width_nm = 700;
    w.direction = Vec3::UnitY();
    w.waveform = CurrentWaveform::dc(2e-3);
    for (const Vec3& r : {Vec3(0, 0, 60), Vec3(300, 0, 60), Vec3(-520, 0, 80), Vec3(900, 0, 150)}) {
        const Vec3 bs = filament_sheet(700, 2e-3, r, 700, 2e5, 8000);
        const Vec3 model = wire_field(w, r, 0);
        CHECK((bs - model).norm() < 5e-3 * model.norm());
    }
}

TEST_CASE("wire field is odd in current and superposes") {
    FiniteWire w;
    w.direction = Vec3(std::cos(0.3), std::sin(0.3), 0);
    const Vec3 r(120, -40, 70);
    CHECK(wire_field_at_current(w, r, 3e-3) == -wire_field_at_current(w, r, -3e-3));

    w.waveform = CurrentWaveform::dc(1e-3);
    const UniformField u{Vec3(1e-4, 2e-4, 3e-4)};
    const std::vector<FieldSource> none;
    CHECK(total_field(none, r, 0) == Vec3::Zero());
    const std::vector<FieldSource> one{u};
    CHECK(total_field(one, r, 0) == u.b);

    FiniteWire centered = w;
    centered.direction = Vec3::UnitY();
    const std::vector<FieldSource> both{u, centered};
    const Vec3 at_mid = total_field(both, Vec3(0, 0, 50), 0);
    CHECK(at_mid.z() == u.b.z());
    CHECK(at_mid.x() == doctest::Approx(u.b.x() + wire_field(centered, Vec3(0, 0, 50), 0).x()));
}

TEST_CASE("analytic fields are divergence-free") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> xy(-800, 800), zz(20, 200);
    StripeEdge e;
    e.edge_normal = Vec3(0.6, 0.8, 0);
    FiniteWire w;
    w.direction = Vec3(std::cos(1.1), std::sin(1.1), 0);
    for (int i = 0; i < 50; ++i) {
        const Vec3 r(xy(rng), xy(rng), zz(rng));
        const double h = 1e-3;
        const auto fe = [&](const Vec3& p) { return edge_field(e, p); };
        const auto fw = [&](const Vec3& p) { return wire_field_at_current(w, p, 1e-3); };
        CHECK(std::abs(divergence(fe, r, h)) < 1e-6 * edge_field(e, r).norm() / r.z());
        CHECK(std::abs(divergence(fw, r, h)) < 1e-6 * fw(r).norm() / r.z());
    }
}

TEST_CASE("wire requires z > 0 and validates") {
    FiniteWire w;
    CHECK_THROWS_AS(wire_field(w, Vec3(0, 0, 0), 0), OutOfDomain);
    w.width_nm = 0;
    CHECK_THROWS_AS(w.validate(), InvalidArgument);
    w.width_nm = 700;
    w.waveform = CurrentWaveform::async_ac(1e-3, 0.0);
    CHECK_THROWS_AS(w.validate(), InvalidArgument);
}

TEST_CASE("arcsine sampling of asynchronous AC") {
    const CurrentWaveform ac = CurrentWaveform::async_ac(2e-3, 35211.43);
    Rng rng = make_stream(5, 0);
    const int n = 1000000;
    double s1 = 0, s2 = 0;
    int near_edge = 0, near_zero = 0;
    double peak = 0;
    for (int i = 0; i < n; ++i) {
        const double v = sample_ac_instant(ac, rng);
        s1 += v;
        s2 += v * v;
        const double f = v / 2e-3;
        if (std::abs(f) > 0.95) ++near_edge;
        if (std::abs(f) < 0.05) ++near_zero;
        peak = std::max(peak, std::abs(f));
    }
    CHECK(std::abs(s1 / n) < 4.0 * 2e-3 / std::sqrt(double(n)));
    CHECK(s2 / n == doctest::Approx(0.5 * 4e-6).epsilon(0.01));
    CHECK(near_edge > 2 * near_zero);
    CHECK(peak <= 1.0);

    CHECK_THROWS_AS(sample_ac_instant(CurrentWaveform::dc(1e-3), rng), InvalidArgument);
}
