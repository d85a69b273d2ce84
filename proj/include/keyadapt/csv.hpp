#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include "keyadapt/error.hpp"

namespace keyadapt {

/// Reals are written with 17 significant digits, which round-trips doubles.
inline std::string format_real(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvTable {
public:
    struct Cell {
        std::string text;
        Cell(double v) : text(format_real(v)) {}
        Cell(int v) : text(std::to_string(v)) {}
        Cell(std::size_t v) : text(std::to_string(v)) {}
        Cell(bool v) : text(v ? "1" : "0") {}
        Cell(std::string v) : text(std::move(v)) {}
        Cell(const char* v) : text(v) {}
    };

    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::initializer_list<Cell> cells) {
        if (cells.size() != header_.size())
            throw Error(ErrorKind::shape, "CSV row has " + std::to_string(cells.size()) + " cells, header has " +
                                              std::to_string(header_.size()));
        std::vector<std::string> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(c.text);
        rows_.push_back(std::move(row));
    }

    const std::vector<std::string>& header() const noexcept { return header_; }
    const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }
    std::size_t row_count() const noexcept { return rows_.size(); }

    std::string str() const {
        std::string out;
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += cells[i];
            }
            out += '\n';
        };
        line(header_);
        for (const auto& r : rows_) line(r);
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Writes to a temporary sibling, then renames over the destination.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::io, "cannot write " + tmp);
        out << content;
        if (!out.flush()) throw Error(ErrorKind::io, "short write to " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::io, "cannot rename " + tmp + ": " + ec.message());
}

} // namespace keyadapt
