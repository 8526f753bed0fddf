#include "ionpot/csv.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ionpot/errors.hpp"

namespace ionpot {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void CsvTable::add_meta(const std::string& key, const std::string& value) {
    metadata.emplace_back(key, value);
}

std::optional<std::string> CsvTable::find_meta(const std::string& key) const {
    for (const auto& [k, v] : metadata) {
        if (k == key) return v;
    }
    return std::nullopt;
}

bool CsvTable::has_column(const std::string& name) const {
    for (const auto& c : columns) {
        if (c == name) return true;
    }
    return false;
}

const std::vector<double>& CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i) {
        if (columns[i] == name) return data[i];
    }
    throw IoError("missing CSV column: " + name);
}

void write_csv(const std::string& path, const CsvTable& table) {
    if (table.columns.size() != table.data.size()) {
        throw InvalidArgument("CSV header/data column count mismatch");
    }
    for (const auto& col : table.data) {
        if (col.size() != table.rows()) {
            throw InvalidArgument("CSV columns have unequal lengths");
        }
    }

    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const auto& [k, v] : table.metadata) {
        out << "# " << k << ": " << v << "\n";
    }
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        out << (c ? "," : "") << table.columns[c];
    }
    out << "\n";
    for (std::size_t r = 0; r < table.rows(); ++r) {
        for (std::size_t c = 0; c < table.data.size(); ++c) {
            out << (c ? "," : "") << format_double(table.data[c][r]);
        }
        out << "\n";
    }
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

namespace {

std::vector<std::string> split_commas(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        const std::size_t end = comma == std::string::npos ? line.size() : comma;
        std::size_t a = start;
        std::size_t b = end;
        while (a < b && (line[a] == ' ' || line[a] == '\t')) ++a;
        while (b > a && (line[b - 1] == ' ' || line[b - 1] == '\t' || line[b - 1] == '\r')) --b;
        out.push_back(line.substr(a, b - a));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

} // namespace

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open for reading: " + path);

    CsvTable table;
    std::string line;
    bool have_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string body = line.substr(1);
            const std::size_t colon = body.find(':');
            if (colon != std::string::npos) {
                std::string key = body.substr(0, colon);
                std::string value = body.substr(colon + 1);
                const auto trim = [](std::string& s) {
                    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(0, 1);
                    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.pop_back();
                };
                trim(key);
                trim(value);
                if (!key.empty()) table.add_meta(key, value);
            }
            continue;
        }
        if (!have_header) {
            table.columns = split_commas(line);
            table.data.assign(table.columns.size(), {});
            have_header = true;
            continue;
        }
        const std::vector<std::string> cells = split_commas(line);
        if (cells.size() != table.columns.size()) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": expected " << table.columns.size()
                << " cells, got " << cells.size();
            throw IoError(msg.str());
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            char* end = nullptr;
            const double v = std::strtod(cells[c].c_str(), &end);
            if (end == cells[c].c_str() || *end != '\0') {
                throw IoError(path + ":" + std::to_string(line_no) +
                              ": non-numeric cell '" + cells[c] + "'");
            }
            table.data[c].push_back(v);
        }
    }
    if (!have_header) throw IoError("empty CSV: " + path);
    return table;
}

} // namespace ionpot
