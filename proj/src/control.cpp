#include "pktffr/control.hpp"

#include "pktffr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <spdlog/spdlog.h>
#include <string>

namespace pktffr::control {

void ControlParams::validate() const
{
    if (!(f_db > 0.0 && f_db < f_max))
        throw ConfigError("control: need 0 < f_db < f_max");
    if (!(eta_min >= 0.0 && eta_min < 1.0)) throw ConfigError("control: eta_min must lie in [0, 1)");
    if (!std::isfinite(K_D)) throw ConfigError("control: K_D must be finite");
    if (!(alpha_w > 0.0)) throw ConfigError("control: alpha_w must be positive");
    if (!(T_D >= 0.0)) throw ConfigError("control: T_D must be >= 0");
}

double g1(double delta_f, const ControlParams& p)
{
    const double a = std::abs(delta_f);
    if (a <= p.f_db) return 0.0;
    if (a >= p.f_max) return p.f_max - p.f_db;
    return a - p.f_db;
}

double g2(double x, const ControlParams& p)
{
    return std::min(std::max(1.0 - std::abs(x), p.eta_min), 1.0);
}

double eta(double delta_f, double rocof_val, const ControlParams& p)
{
    const double a = std::abs(delta_f);
    if (!(a >= p.f_db)) return 1.0;  // also maps NaN to no participation
    if (a > p.f_max) return p.eta_min;
    return g2(p.kp() * g1(delta_f, p) + p.K_D * rocof_val, p);
}

double max_kd(double eta_min, double f_nadir, double r_max, const ControlParams& p)
{
    if (!(f_nadir > p.f_db && f_nadir <= p.f_max))
        throw DomainError("max_kd: nadir deviation must satisfy f_db < nadir <= f_max");
    if (!(r_max > 0.0)) throw DomainError("max_kd: r_max must be positive");
    return (1.0 - (f_nadir - p.f_db) / (p.f_max - p.f_db) - eta_min) / r_max;
}

FreqWindow::FreqWindow(double dt_s, double span_s) : dt_(dt_s)
{
    if (!(dt_s > 0.0)) throw DomainError("window sampling interval must be positive");
    const auto n = static_cast<std::size_t>(std::llround(span_s / dt_s)) + 1;
    t_.assign(n, 0.0);
    v_.assign(n, 0.0);
}

void FreqWindow::push(double t, double value)
{
    if (count_ > 0 && !(t > time_at(0))) throw DomainError("window timestamps must increase");
    t_[head_] = t;
    v_[head_] = value;
    head_ = (head_ + 1) % t_.size();
    count_ = std::min(count_ + 1, t_.size());
}

void FreqWindow::clear()
{
    head_ = 0;
    count_ = 0;
}

double FreqWindow::value_at(std::size_t lag) const
{
    if (lag >= count_) throw InsufficientHistory("window holds " + std::to_string(count_) + " samples");
    return v_[(head_ + t_.size() - 1 - lag) % t_.size()];
}

double FreqWindow::time_at(std::size_t lag) const
{
    if (lag >= count_) throw InsufficientHistory("window holds " + std::to_string(count_) + " samples");
    return t_[(head_ + t_.size() - 1 - lag) % t_.size()];
}

double FreqWindow::covered() const
{
    if (count_ < 2) return 0.0;
    return time_at(0) - time_at(count_ - 1);
}

double rocof(const FreqWindow& w, double alpha_w)
{
    const auto lag = static_cast<std::size_t>(std::llround(alpha_w / w.dt()));
    if (lag == 0 || w.size() <= lag)
        throw InsufficientHistory("RoCoF window does not yet span " + std::to_string(alpha_w) + " s");
    return (w.value_at(0) - w.value_at(lag)) / alpha_w;
}

double LowPass::update(double u, double dt)
{
    if (T_D_ <= 0.0) {
        y_ = u;
        return y_;
    }
    if (!primed_) {
        primed_ = true;
        y_ = u;
        return y_;
    }
    y_ += (1.0 - std::exp(-dt / T_D_)) * (u - y_);
    return y_;
}

RocofEstimator::RocofEstimator(const ControlParams& p, double dt_s)
    : alpha_w_(p.alpha_w), dt_(dt_s), window_(dt_s, p.alpha_w), filter_(p.T_D)
{
}

double RocofEstimator::update(double t, double value)
{
    window_.push(t, value);
    double raw = 0.0;
    try {
        raw = rocof(window_, alpha_w_);
    } catch (const InsufficientHistory&) {
        if (!warned_) {
            spdlog::warn("RoCoF requested with {:.3f} s of history; using 0", window_.covered());
            warned_ = true;
        }
        return 0.0;
    }
    return filter_.update(raw, dt_);
}

bool RocofEstimator::ready() const
{
    return window_.size() > static_cast<std::size_t>(std::llround(alpha_w_ / dt_));
}

void RocofEstimator::reset()
{
    window_.clear();
    filter_.reset();
}

void RocofEstimator::prime(double t, double value)
{
    reset();
    const long lag = std::lround(alpha_w_ / dt_);
    for (long j = lag; j >= 0; --j) window_.push(t - static_cast<double>(j) * dt_, value);
    filter_.update(0.0, dt_);
}

} // namespace pktffr::control
