#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pktffr::agc {

struct Series {
    std::vector<double> time_s;
    std::vector<double> power_mw;
    double dt() const { return time_s.size() > 1 ? time_s[1] - time_s[0] : 0.0; }
};

/// Reads a CSV with columns time_s, power_MW. Throws DataError.
Series read_csv(const std::string& path);
void write_csv(const std::string& path, const Series& s);

/// Synthetic regulation signal: harmonics h = 1..duration/(2·dt) with
/// amplitude jitter·(1/h), random phases from `seed`, demeaned and scaled to
/// a peak magnitude of 1.
Series synthesize_regd(std::uint64_t seed = 20240611, double duration = 7200.0, double dt = 2.0);

} // namespace pktffr::agc
