#ifndef IONPOT_CSV_HPP
#define IONPOT_CSV_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ionpot {

// Numeric table with '#'-prefixed "key: value" metadata lines above the
// header row. Values round-trip exactly (%.17g).
struct CsvTable {
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;  // column-major, equal lengths

    std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }

    void add_meta(const std::string& key, const std::string& value);
    std::optional<std::string> find_meta(const std::string& key) const;

    // Column by header name; throws IoError when absent.
    const std::vector<double>& column(const std::string& name) const;
    bool has_column(const std::string& name) const;
};

void write_csv(const std::string& path, const CsvTable& table);

CsvTable read_csv(const std::string& path);

// %.17g, the shortest form that round-trips a double exactly.
std::string format_double(double v);

} // namespace ionpot

#endif
