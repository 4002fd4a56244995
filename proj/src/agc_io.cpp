#include "pktffr/agc_io.hpp"

#include "pktffr/csv.hpp"
#include "pktffr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace pktffr::agc {

Series read_csv(const std::string& path)
{
    const auto t = csv::read(path);
    Series s;
    s.time_s = t.column("time_s");
    s.power_mw = t.column("power_MW");
    for (std::size_t i = 0; i < s.power_mw.size(); ++i)
        if (!std::isfinite(s.power_mw[i]) || !std::isfinite(s.time_s[i]))
            throw DataError(path + ": non-finite value at row " + std::to_string(i + 1));
    return s;
}

void write_csv(const std::string& path, const Series& s)
{
    csv::Writer w(path, {"time_s", "power_MW"});
    for (std::size_t i = 0; i < s.time_s.size(); ++i) w.row({s.time_s[i], s.power_mw[i]});
}

Series synthesize_regd(std::uint64_t seed, double duration, double dt)
{
    if (!(duration > 0.0 && dt > 0.0)) throw DomainError("duration and dt must be positive");
    const auto K = static_cast<std::size_t>(std::llround(duration / dt));
    const std::size_t hmax = K / 2;
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> amp(hmax + 1), phase(hmax + 1);
    for (std::size_t h = 1; h <= hmax; ++h) {
        amp[h] = (0.5 + uni(gen)) / static_cast<double>(h);
        phase[h] = 2.0 * std::numbers::pi * uni(gen);
    }
    Series s;
    s.time_s.resize(K);
    s.power_mw.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        s.time_s[k] = static_cast<double>(k) * dt;
        double v = 0.0;
        for (std::size_t h = 1; h <= hmax; ++h)
            v += amp[h] * std::cos(2.0 * std::numbers::pi * static_cast<double>(h * k) / static_cast<double>(K) - phase[h]);
        s.power_mw[k] = v;
    }
    double mean = 0.0;
    for (double v : s.power_mw) mean += v;
    mean /= static_cast<double>(K);
    double peak = 0.0;
    for (double& v : s.power_mw) {
        v -= mean;
        peak = std::max(peak, std::abs(v));
    }
    for (double& v : s.power_mw) v /= peak;
    return s;
}

} // namespace pktffr::agc
