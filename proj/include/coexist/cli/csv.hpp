#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "coexist/errors.hpp"

namespace coexist::cli {

/// 17 significant digits, round-trippable; NaN becomes an empty field.
inline std::string format_real(double x) {
    if (std::isnan(x)) return "";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// RFC 4180: fields with a comma, quote, CR or LF are quoted and inner quotes doubled.
inline std::string quote_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

using Field = std::variant<std::string, double, long long, bool>;

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add(std::vector<Field> row) {
        require(row.size() == header_.size(), ErrorKind::DimensionMismatch, "CSV row width does not match header");
        rows_.push_back(std::move(row));
    }

    [[nodiscard]] std::string str() const {
        std::string out;
        auto line = [&out](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += quote_field(cells[i]);
            }
            out += "\r\n";
        };
        line(header_);
        for (const auto& row : rows_) {
            std::vector<std::string> cells;
            for (const auto& f : row) {
                if (const auto* s = std::get_if<std::string>(&f)) cells.push_back(*s);
                else if (const auto* d = std::get_if<double>(&f)) cells.push_back(format_real(*d));
                else if (const auto* i = std::get_if<long long>(&f)) cells.push_back(std::to_string(*i));
                else cells.push_back(std::get<bool>(f) ? "true" : "false");
            }
            line(cells);
        }
        return out;
    }

    [[nodiscard]] const std::vector<std::string>& header() const noexcept { return header_; }
    [[nodiscard]] std::size_t size() const noexcept { return rows_.size(); }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<Field>> rows_;
};

/// Writes to a temporary sibling and renames it over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::InvalidArgument, "cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) fail(ErrorKind::InvalidArgument, "failed writing " + tmp.string());
    }
    fs::rename(tmp, path);
}

/// Minimal RFC 4180 reader (used by tests and the check round trip).
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
            continue;
        }
        if (c == '"') quoted = true;
        else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
        } else if (c == '\r') continue;
        else if (c == '\n') {
            row.push_back(std::move(cell));
            cell.clear();
            rows.push_back(std::move(row));
            row.clear();
        } else cell += c;
    }
    if (!cell.empty() || !row.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace coexist::cli
