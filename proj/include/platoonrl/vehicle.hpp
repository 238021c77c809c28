#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace prl {

enum class VClass { Light, Heavy };

/// Longitudinal kinematic state of one vehicle plus its physical class.
/// Single lane, y fixed at 0; position_x is the lane-longitudinal center.
struct VehicleState {
    double position_x = 0.0;   // m
    double velocity = 0.0;     // m/s, never negative
    double acceleration = 0.0; // m/s^2, realized during the last step
    double length = 4.0;       // m
    double max_decel = -7.5;   // m/s^2, negative bound
    double accel_cap = 3.0;    // m/s^2, positive bound
    VClass vclass = VClass::Light;
};

inline VehicleState make_vehicle(VClass c, double x, double v) {
    VehicleState s;
    s.vclass = c;
    s.position_x = x;
    s.velocity = v;
    if (c == VClass::Heavy) {
        s.length = 8.0;
        s.max_decel = -4.0;
        s.accel_cap = 2.0;
    }
    return s;
}

/// The 8-dimensional RL observation, fixed component order.
struct EnvState {
    double d_fm = 0.0; // m, front-to-middle bumper gap
    double d_mr = 0.0; // m, middle-to-rear bumper gap
    double v_f = 0.0;  // m/s
    double v_m = 0.0;
    double v_r = 0.0;
    double a_f = 0.0;  // m/s^2
    double a_m = 0.0;
    double a_r = 0.0;

    std::array<double, 8> as_array() const {
        return {d_fm, d_mr, v_f, v_m, v_r, a_f, a_m, a_r};
    }
};

constexpr double kNoNeighborGap = std::numeric_limits<double>::infinity();

/// Advances one vehicle by dt under a commanded acceleration. The command is
/// clamped to [max_decel, accel_cap]; velocity is floored at zero and the
/// position update integrates only up to the stop time, so a braking vehicle
/// never creeps backwards inside a step.
inline VehicleState step_vehicle(const VehicleState& v, double commanded_accel, double dt) {
    if (!(dt > 0.0)) throw std::domain_error("step_vehicle: dt must be > 0");
    if (!std::isfinite(commanded_accel) || !std::isfinite(v.position_x) ||
        !std::isfinite(v.velocity)) {
        throw std::domain_error("step_vehicle: non-finite input");
    }
    VehicleState out = v;
    const double a = std::clamp(commanded_accel, v.max_decel, v.accel_cap);
    const double v_new = v.velocity + a * dt;
    if (v_new < 0.0) {
        // stops inside the step; integrate to the stop time only
        const double t_stop = (a < 0.0) ? v.velocity / (-a) : 0.0;
        out.position_x = v.position_x + v.velocity * t_stop + 0.5 * a * t_stop * t_stop;
        out.velocity = 0.0;
    } else {
        out.position_x = v.position_x + v.velocity * dt + 0.5 * a * dt * dt;
        out.velocity = v_new;
    }
    out.acceleration = a;
    return out;
}

}  // namespace prl
