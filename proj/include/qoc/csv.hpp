#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "qoc/dynamics.hpp"

namespace qoc {

/// Locale-free decimal text with 17 significant digits; round-trips exactly.
inline std::string format_double(double x) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x,
                                   std::chars_format::scientific, 16);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double x = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, x);
    if (res.ec != std::errc() || res.ptr != last)
        throw ContractViolation("parse_double: not a number: '" + std::string(s) + "'");
    return x;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    return cells;
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : out_(path) {
        if (!out_) throw NumericalFailure("cannot open " + path.string() + " for writing");
        write_cells(header);
    }

    void row(const std::vector<std::string>& cells) { write_cells(cells); }

private:
    void write_cells(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

    std::ofstream out_;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        return -1;
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ContractViolation("cannot open " + path.string());
    CsvTable table;
    std::string line;
    if (std::getline(in, line)) table.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        table.rows.push_back(split_csv_line(line));
    }
    return table;
}

/// Control schedule as CSV: dt_s, then one column per control component.
inline void save_controls(const std::filesystem::path& path, const ControlSequence& seq) {
    std::vector<std::string> header{"dt_s"};
    const auto nc = seq.controls.front().size();
    for (Eigen::Index k = 0; k < nc; ++k) header.push_back("u_" + std::to_string(k));
    CsvWriter w(path, header);
    for (std::size_t j = 0; j < seq.grid.segments(); ++j) {
        std::vector<std::string> cells{format_double(seq.grid.dt(j))};
        for (Eigen::Index k = 0; k < nc; ++k) cells.push_back(format_double(seq.controls[j][k]));
        w.row(cells);
    }
}

inline ControlSequence load_controls(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    if (t.header.empty() || t.header.front() != "dt_s")
        throw ContractViolation(path.string() + ": expected a dt_s leading column");
    const int nc = static_cast<int>(t.header.size()) - 1;
    if (nc < 1) throw ContractViolation(path.string() + ": no control columns");
    std::vector<double> dts;
    std::vector<RealVector> controls;
    for (const auto& row : t.rows) {
        if (static_cast<int>(row.size()) != nc + 1)
            throw ContractViolation(path.string() + ": ragged row");
        dts.push_back(parse_double(row[0]));
        RealVector u(nc);
        for (int k = 0; k < nc; ++k) u[k] = parse_double(row[static_cast<std::size_t>(k) + 1]);
        controls.push_back(u);
    }
    if (dts.empty()) throw ContractViolation(path.string() + ": no segments");
    return ControlSequence(std::move(controls), TimeGrid(std::move(dts)));
}

}  // namespace qoc
