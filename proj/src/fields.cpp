#include "nvmux/fields.hpp"

#include <cmath>

#include "nvmux/errors.hpp"

namespace nvmux {
namespace {

constexpr double kNm = 1e-9;

void require_above_plane(const Vec3& r_nm) {
    if (!r_nm.allFinite()) throw InvalidArgument("field point must be finite");
    if (!(r_nm.z() > 0.0)) throw OutOfDomain("field point must lie above the source plane (z > 0)");
}

bool is_in_plane_unit(const Vec3& v) {
    return std::abs(v.norm() - 1.0) < 1e-9 && std::abs(v.z()) < 1e-12;
}

}  // namespace

void StripeEdge::validate() const {
    if (!(sheet_moment_t_nm > 0.0)) throw InvalidArgument("sheet moment must be positive");
    if (!is_in_plane_unit(edge_normal)) throw InvalidArgument("edge normal must be an in-plane unit vector");
    if (magnetization_sign != 1 && magnetization_sign != -1) {
        throw InvalidArgument("magnetization sign must be +1 or -1");
    }
}

void CurrentWaveform::validate() const {
    if (!(amplitude_a >= 0.0)) throw InvalidArgument("current amplitude must be >= 0");
    if (kind == Kind::AsyncAc && !(frequency_hz > 0.0)) {
        throw InvalidArgument("AC frequency must be positive");
    }
}

double CurrentWaveform::current_at(double t_s) const {
    if (kind == Kind::Dc) return amplitude_a;
    return amplitude_a * std::sin(2.0 * std::numbers::pi * frequency_hz * t_s);
}

void FiniteWire::validate() const {
    if (!(width_nm > 0.0)) throw InvalidArgument("wire width must be positive");
    if (!is_in_plane_unit(direction)) throw InvalidArgument("current direction must be an in-plane unit vector");
    waveform.validate();
}

Vec3 edge_field(const StripeEdge& source, const Vec3& r_nm) {
    require_above_plane(r_nm);
    const double x = r_nm.dot(source.edge_normal) - source.edge_position_nm;
    const double z = r_nm.z();
    const double scale = source.magnetization_sign * source.sheet_moment_t_nm /
                         (2.0 * std::numbers::pi * (x * x + z * z));
    return scale * (z * source.edge_normal - x * Vec3::UnitZ());
}

Vec3 wire_field_at_current(const FiniteWire& source, const Vec3& r_nm, double current_a) {
    require_above_plane(r_nm);
    const Vec3 t_hat = source.transverse();
    const double x = r_nm.dot(t_hat) - source.center_nm;
    const double z = r_nm.z();
    const double h = 0.5 * source.width_nm;
    const double w_m = source.width_nm * kNm;

    const double bx = kMu0 * current_a / (2.0 * std::numbers::pi * w_m) *
                      (std::atan((x + h) / z) - std::atan((x - h) / z));
    const double bz = kMu0 * current_a / (4.0 * std::numbers::pi * w_m) *
                      std::log(((x - h) * (x - h) + z * z) / ((x + h) * (x + h) + z * z));
    return bx * t_hat + bz * Vec3::UnitZ();
}

Vec3 wire_field(const FiniteWire& source, const Vec3& r_nm, double t_s) {
    return wire_field_at_current(source, r_nm, source.waveform.current_at(t_s));
}

double sample_ac_instant(const CurrentWaveform& waveform, Rng& rng) {
    if (waveform.kind != CurrentWaveform::Kind::AsyncAc) {
        throw InvalidArgument("arcsine sampling needs an asynchronous-AC waveform");
    }
    const double u = 2.0 * std::numbers::pi * uniform01(rng);
    return waveform.amplitude_a * std::sin(u);
}

Vec3 source_field(const FieldSource& source, const Vec3& r_nm, double t_s) {
    return std::visit(
        [&](const auto& s) -> Vec3 {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, UniformField>) {
                return s.b;
            } else if constexpr (std::is_same_v<T, StripeEdge>) {
                return edge_field(s, r_nm);
            } else {
                return wire_field(s, r_nm, t_s);
            }
        },
        source);
}

Vec3 total_field(std::span<const FieldSource> sources, const Vec3& r_nm, double t_s) {
    Vec3 b = Vec3::Zero();
    for (const auto& s : sources) b += source_field(s, r_nm, t_s);
    return b;
}

}  // namespace nvmux
