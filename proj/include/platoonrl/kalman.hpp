#pragma once

#include <Eigen/Dense>
#include <array>
#include <span>
#include <stdexcept>

namespace prl {

/// Constant-acceleration Kalman filter over scalar position measurements.
/// State is (position, velocity, acceleration); process noise is white jerk
/// with spectral density jerk_psd, measurement noise variance meas_var.
struct KalmanState {
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    Eigen::Matrix3d cov = Eigen::Matrix3d::Identity();
    double jerk_psd = 5.0;  // (m/s^3)^2 * s
    double meas_var = 0.04; // m^2  (0.2 m std)
};

inline KalmanState kf_init(double x0, const std::array<double, 3>& p0_diag,
                           double jerk_psd = 5.0, double meas_var = 0.04) {
    for (double p : p0_diag) {
        if (!(p > 0.0)) throw std::domain_error("kf_init: variances must be positive");
    }
    if (!(meas_var > 0.0)) throw std::domain_error("kf_init: meas_var must be positive");
    KalmanState s;
    s.mean << x0, 0.0, 0.0;
    s.cov = Eigen::Vector3d(p0_diag[0], p0_diag[1], p0_diag[2]).asDiagonal();
    s.jerk_psd = jerk_psd;
    s.meas_var = meas_var;
    return s;
}

inline Eigen::Matrix3d kf_transition(double dt) {
    Eigen::Matrix3d f;
    f << 1.0, dt, 0.5 * dt * dt,
         0.0, 1.0, dt,
         0.0, 0.0, 1.0;
    return f;
}

/// Discrete white-jerk process noise for the CA model.
inline Eigen::Matrix3d kf_process_noise(double dt, double q) {
    const double d2 = dt * dt, d3 = d2 * dt, d4 = d3 * dt, d5 = d4 * dt;
    Eigen::Matrix3d qm;
    qm << d5 / 20.0, d4 / 8.0, d3 / 6.0,
          d4 / 8.0,  d3 / 3.0, d2 / 2.0,
          d3 / 6.0,  d2 / 2.0, dt;
    return q * qm;
}

inline KalmanState kf_predict(const KalmanState& s, double dt) {
    if (!(dt > 0.0)) throw std::domain_error("kf_predict: dt must be > 0");
    KalmanState out = s;
    const Eigen::Matrix3d f = kf_transition(dt);
    out.mean = f * s.mean;
    out.cov = f * s.cov * f.transpose() + kf_process_noise(dt, s.jerk_psd);
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    return out;
}

/// Measurement update with H = [1, 0, 0], Joseph-form covariance.
inline KalmanState kf_update(const KalmanState& s, double z) {
    if (!std::isfinite(z)) throw std::domain_error("kf_update: non-finite measurement");
    KalmanState out = s;
    const Eigen::RowVector3d h(1.0, 0.0, 0.0);
    const double innov = z - s.mean(0);
    const double innov_var = s.cov(0, 0) + s.meas_var;
    const Eigen::Vector3d gain = s.cov.col(0) / innov_var;
    out.mean = s.mean + gain * innov;
    const Eigen::Matrix3d ikh = Eigen::Matrix3d::Identity() - gain * h;
    out.cov = ikh * s.cov * ikh.transpose() + gain * s.meas_var * gain.transpose();
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    return out;
}

/// Runs the filter over a position stream and returns the final velocity and
/// acceleration estimates. A single sample returns the (0, 0) prior.
inline std::pair<double, double> estimate_neighbor(std::span<const double> positions, double dt,
                                                   double jerk_psd = 5.0, double meas_var = 0.04) {
    if (positions.empty()) throw std::domain_error("estimate_neighbor: empty history");
    KalmanState s = kf_init(positions[0], {meas_var, 10.0, 10.0}, jerk_psd, meas_var);
    for (std::size_t i = 1; i < positions.size(); ++i) {
        s = kf_predict(s, dt);
        s = kf_update(s, positions[i]);
    }
    return {s.mean(1), s.mean(2)};
}

/// Streaming tracker for a neighbor vehicle's absolute center position.
/// Seeds the velocity with a caller-supplied prior (typically the tracking
/// vehicle's own speed) so early TTC queries are not wildly biased.
class NeighborTracker {
public:
    NeighborTracker() = default;
    NeighborTracker(double jerk_psd, double meas_var)
        : jerk_psd_(jerk_psd), meas_var_(meas_var) {}

    void reset() { started_ = false; }

    void observe(double z, double dt, double velocity_prior) {
        if (!started_) {
            s_ = kf_init(z, {meas_var_, 4.0, 4.0}, jerk_psd_, meas_var_);
            s_.mean(1) = velocity_prior;
            started_ = true;
            return;
        }
        s_ = kf_predict(s_, dt);
        s_ = kf_update(s_, z);
    }

    bool started() const { return started_; }
    double position() const { return s_.mean(0); }
    double velocity() const { return s_.mean(1); }
    double acceleration() const { return s_.mean(2); }
    const KalmanState& state() const { return s_; }

private:
    KalmanState s_;
    double jerk_psd_ = 5.0;
    double meas_var_ = 0.04;
    bool started_ = false;
};

}  // namespace prl
