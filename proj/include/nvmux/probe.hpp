#pragma once

#include <array>
#include <Eigen/Core>
#include <Eigen/Geometry>

namespace nvmux {

using Vec3 = Eigen::Vector3d;

/// Measurement axis of a sensor, given by polar angle theta (from +z) and
/// azimuth phi (from +x), both in degrees.
///
/// A negative theta is folded into the equivalent (|theta|, phi + 180)
/// representation; phi is kept in (-180, 180].
class SensorAxis {
public:
    SensorAxis() : SensorAxis(0.0, 0.0) {}
    SensorAxis(double theta_deg, double phi_deg);

    /// Axis along an arbitrary non-zero vector.
    static SensorAxis from_vector(const Vec3& v);

    double theta_deg() const noexcept { return theta_deg_; }
    double phi_deg() const noexcept { return phi_deg_; }
    const Vec3& unit() const noexcept { return unit_; }

private:
    double theta_deg_;
    double phi_deg_;
    Vec3 unit_;
};

SensorAxis axis_from_angles(double theta_deg, double phi_deg);

/// Component of `field` along the sensor axis.
double project_field(const SensorAxis& axis, const Vec3& field);

/// Ratio of the second to the first sensor's projection of the shared field.
/// Throws DegenerateProjection when |e1 . bc| < `epsilon` tesla.
double correlation_factor_m(const SensorAxis& axis1, const SensorAxis& axis2, const Vec3& bc,
                            double epsilon = 1e-15);

/// Intrinsic dephasing exponent zeta(tau). Either a fixed value (already
/// evaluated at the working tau) or the stretched form (tau / T2*)^p.
struct Dephasing {
    enum class Kind { Fixed, PowerLaw };

    Kind kind = Kind::Fixed;
    double value = 0.0;
    double t2star_s = 0.0;
    double power = 2.0;

    static Dephasing fixed(double zeta);
    static Dephasing power_law(double t2star_s, double power = 2.0);

    double at(double tau_s) const;
};

struct NvSensor {
    SensorAxis axis;
    Vec3 position_nm = Vec3::Zero();
    double photon_yield = 0.1;  // mean photons per readout in m_S = 0
    double contrast = 0.2;      // fractional PL contrast epsilon
    Dephasing dephasing;
    std::array<double, 2> transition_mhz{0.0, 0.0};

    /// Throws InvalidArgument if the photon yield, contrast or dephasing are out of range.
    void validate() const;

    /// c * epsilon * exp(-zeta(tau)).
    double readout_contrast(double tau_s) const;
};

struct ProbePair {
    NvSensor first;
    NvSensor second;

    Vec3 separation() const { return second.position_nm - first.position_nm; }
    const NvSensor& operator[](std::size_t i) const { return i == 0 ? first : second; }
};

}  // namespace nvmux
