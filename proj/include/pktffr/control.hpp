#pragma once

#include <cstddef>
#include <vector>

namespace pktffr::control {

struct ControlParams {
    double f_db = 0.036;   // Hz
    double f_max = 0.200;  // Hz
    double eta_min = 0.0;
    double K_D = 2.0;
    double alpha_w = 0.5;  // s, RoCoF window
    double T_D = 0.1;      // s, derivative low-pass; 0 disables

    /// Proportional gain, always derived from the deadband and saturation.
    double kp() const { return 1.0 / (f_max - f_db); }
    /// Throws ConfigError when an invariant is violated.
    void validate() const;
};

/// Deadband/saturation shaping of a frequency deviation. Returns Hz >= 0.
double g1(double delta_f, const ControlParams& p);

/// min(max(1 - |x|, eta_min), 1)
double g2(double x, const ControlParams& p);

/// Participation threshold. `rocof_val` is the derivative of the shaped
/// deviation g1(Δf), positive while the deviation grows.
double eta(double delta_f, double rocof_val, const ControlParams& p);

/// Largest K_D keeping the threshold at or above eta_min for the given
/// nadir deviation and RoCoF. Throws DomainError unless f_db < f_nadir <= f_max.
double max_kd(double eta_min, double f_nadir, double r_max, const ControlParams& p);

/// Fixed-rate window of (time, value) samples.
class FreqWindow {
public:
    /// `dt_s` is the sampling interval, `span_s` the history to retain.
    FreqWindow(double dt_s, double span_s);

    /// Throws DomainError when time does not increase.
    void push(double t, double value);
    void clear();

    std::size_t size() const { return count_; }
    double dt() const { return dt_; }
    /// Sample `lag` positions before the newest (0 = newest).
    double value_at(std::size_t lag) const;
    double time_at(std::size_t lag) const;
    /// Time covered between the oldest and newest retained samples.
    double covered() const;

private:
    double dt_;
    std::vector<double> t_, v_;
    std::size_t head_ = 0;  // next write position
    std::size_t count_ = 0;
};

/// (f[k] - f[k - alpha_w/dt]) / alpha_w. Throws InsufficientHistory until
/// the window spans alpha_w.
double rocof(const FreqWindow& w, double alpha_w);

/// First-order low-pass y' = (u - y)/T_D, discretized exactly for a
/// zero-order-hold input. T_D = 0 passes the input through.
class LowPass {
public:
    explicit LowPass(double T_D = 0.0) : T_D_(T_D) {}
    double update(double u, double dt);
    void reset(double y = 0.0) { y_ = y; primed_ = false; }
    double value() const { return y_; }

private:
    double T_D_;
    double y_ = 0.0;
    bool primed_ = false;
};

/// Stateful RoCoF estimator on the shaped deviation, as run inside a device.
class RocofEstimator {
public:
    RocofEstimator(const ControlParams& p, double dt_s);
    /// Feeds one sample; returns the filtered derivative (0 until the window fills).
    double update(double t, double value);
    bool ready() const;
    void reset();
    /// Fills the window with a constant history ending at `t`.
    void prime(double t, double value);

private:
    double alpha_w_;
    double dt_;
    FreqWindow window_;
    LowPass filter_;
    bool warned_ = false;
};

} // namespace pktffr::control
