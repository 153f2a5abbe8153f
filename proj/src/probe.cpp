#include "nvmux/probe.hpp"

#include <cmath>
#include <numbers>

#include "nvmux/errors.hpp"

namespace nvmux {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

// Maps an angle in degrees to (-180, 180].
double wrap_degrees(double deg) {
    double w = std::remainder(deg, 360.0);
    if (w <= -180.0) w += 360.0;
    return w;
}

}  // namespace

SensorAxis::SensorAxis(double theta_deg, double phi_deg) {
    if (!std::isfinite(theta_deg) || !std::isfinite(phi_deg)) {
        throw InvalidArgument("sensor axis angles must be finite");
    }
    double theta = wrap_degrees(theta_deg);
    double phi = phi_deg;
    if (theta < 0.0) {
        theta = -theta;
        phi += 180.0;
    }
    theta_deg_ = theta;
    phi_deg_ = wrap_degrees(phi);

    const double t = theta_deg_ * kDegToRad;
    const double p = phi_deg_ * kDegToRad;
    unit_ = Vec3(std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t));
}

SensorAxis SensorAxis::from_vector(const Vec3& v) {
    if (!v.allFinite() || v.norm() == 0.0) {
        throw InvalidArgument("sensor axis vector must be finite and non-zero");
    }
    const Vec3 u = v.normalized();
    const double theta = std::atan2(std::hypot(u.x(), u.y()), u.z()) / kDegToRad;
    const double phi = std::atan2(u.y(), u.x()) / kDegToRad;
    return SensorAxis(theta, phi);
}

SensorAxis axis_from_angles(double theta_deg, double phi_deg) {
    return SensorAxis(theta_deg, phi_deg);
}

double project_field(const SensorAxis& axis, const Vec3& field) {
    if (!field.allFinite()) throw InvalidArgument("field must be finite");
    return axis.unit().dot(field);
}

double correlation_factor_m(const SensorAxis& axis1, const SensorAxis& axis2, const Vec3& bc,
                            double epsilon) {
    const double p1 = project_field(axis1, bc);
    if (std::abs(p1) < epsilon) {
        throw DegenerateProjection("shared field has no component along the first sensor axis");
    }
    return project_field(axis2, bc) / p1;
}

Dephasing Dephasing::fixed(double zeta) {
    Dephasing d;
    d.kind = Kind::Fixed;
    d.value = zeta;
    return d;
}

Dephasing Dephasing::power_law(double t2star_s, double power) {
    Dephasing d;
    d.kind = Kind::PowerLaw;
    d.t2star_s = t2star_s;
    d.power = power;
    return d;
}

double Dephasing::at(double tau_s) const {
    if (kind == Kind::Fixed) return value;
    return std::pow(tau_s / t2star_s, power);
}

void NvSensor::validate() const {
    if (!(photon_yield > 0.0) || !std::isfinite(photon_yield)) {
        throw InvalidArgument("photon yield must be positive");
    }
    if (!(contrast >= 0.0 && contrast <= 1.0)) {
        throw InvalidArgument("optical contrast must lie in [0, 1]");
    }
    if (dephasing.kind == Dephasing::Kind::Fixed) {
        if (!(dephasing.value >= 0.0)) throw InvalidArgument("dephasing exponent must be >= 0");
    } else if (!(dephasing.t2star_s > 0.0) || !(dephasing.power > 0.0)) {
        throw InvalidArgument("T2* and stretching exponent must be positive");
    }
    if (!position_nm.allFinite()) throw InvalidArgument("sensor position must be finite");
}

double NvSensor::readout_contrast(double tau_s) const {
    return photon_yield * contrast * std::exp(-dephasing.at(tau_s));
}

}  // namespace nvmux
