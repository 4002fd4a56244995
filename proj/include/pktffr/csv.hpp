#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace pktffr::csv {

/// Numeric table with a header row.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    /// Column values by name; throws DataError if absent.
    std::vector<double> column(const std::string& name) const;
};

/// Reads a comma-separated file whose first line is the header. Blank lines
/// and lines starting with '#' are skipped. Throws DataError on malformed rows.
Table read(const std::string& path);

class Writer {
public:
    Writer(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);
    void row_mixed(const std::vector<std::string>& values);
    const std::string& path() const { return path_; }

private:
    std::string path_;
    std::ofstream out_;
    std::size_t width_;
};

/// Shortest round-trip formatting so repeated runs produce identical bytes.
std::string fmt(double v);

/// Writes a plot-data manifest (file -> column -> description) as JSON.
void write_manifest(const std::string& path,
                    const std::map<std::string, std::map<std::string, std::string>>& files);

} // namespace pktffr::csv
