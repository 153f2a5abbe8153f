#pragma once

#include <numbers>
#include <span>
#include <variant>

#include "nvmux/probe.hpp"
#include "nvmux/random.hpp"

namespace nvmux {

/// Vacuum permeability, T m / A.
inline constexpr double kMu0 = 4e-7 * std::numbers::pi;

struct UniformField {
    Vec3 b = Vec3::Zero();  // tesla
};

/// Straight edge of an out-of-plane magnetized thin film lying in z = 0.
struct StripeEdge {
    double edge_position_nm = 0.0;       // along edge_normal
    Vec3 edge_normal = Vec3::UnitX();    // in-plane unit vector
    double sheet_moment_t_nm = 1.0;      // mu0 * Ms * t
    int magnetization_sign = 1;

    void validate() const;
};

struct CurrentWaveform {
    enum class Kind { Dc, AsyncAc };

    Kind kind = Kind::Dc;
    double amplitude_a = 0.0;
    double frequency_hz = 0.0;

    static CurrentWaveform dc(double amps) { return {Kind::Dc, amps, 0.0}; }
    static CurrentWaveform async_ac(double amps, double hz) { return {Kind::AsyncAc, amps, hz}; }

    void validate() const;
    /// Deterministic current at time t; AC is I0 sin(2 pi f t).
    double current_at(double t_s) const;
};

/// Infinitely thin current sheet of width w in the plane z = 0. The current
/// flows along `direction`; the transverse axis is direction x z.
struct FiniteWire {
    double width_nm = 700.0;
    double center_nm = 0.0;  // along the transverse axis
    CurrentWaveform waveform;
    Vec3 direction = Vec3::UnitY();

    void validate() const;
    Vec3 transverse() const { return direction.cross(Vec3::UnitZ()); }
};

using FieldSource = std::variant<UniformField, StripeEdge, FiniteWire>;

Vec3 edge_field(const StripeEdge& source, const Vec3& r_nm);

/// Field of the sheet at instantaneous current `current_a`.
Vec3 wire_field_at_current(const FiniteWire& source, const Vec3& r_nm, double current_a);
Vec3 wire_field(const FiniteWire& source, const Vec3& r_nm, double t_s);

/// One asynchronous-AC readout: I0 sin(u), u ~ U[0, 2 pi).
double sample_ac_instant(const CurrentWaveform& waveform, Rng& rng);

Vec3 source_field(const FieldSource& source, const Vec3& r_nm, double t_s);
Vec3 total_field(std::span<const FieldSource> sources, const Vec3& r_nm, double t_s);

}  // namespace nvmux
