#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ellv/errors.hpp"

namespace ellv {

/// Floating-point field at 17 significant digits ("%.17g", C locale
/// semantics: '.' decimal separator). 17 digits round-trip any double.
inline std::string fmt_g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

/// Minimal CSV writer for the experiment outputs: optional '#' comment
/// lines, one header row, then data rows. All formatting is deterministic,
/// so identical inputs produce byte-identical files.
class CsvWriter {
public:
    void comment(const std::string& line) { lines_.push_back("# " + line); }

    void header(const std::vector<std::string>& cols) {
        lines_.push_back(join(cols));
    }

    class Row {
    public:
        explicit Row(CsvWriter& w) : writer_(w) {}
        Row& col(double x) { return raw(fmt_g17(x)); }
        Row& col(int x) { return raw(std::to_string(x)); }
        Row& col(long x) { return raw(std::to_string(x)); }
        Row& col(unsigned long x) { return raw(std::to_string(x)); }
        Row& col(unsigned long long x) { return raw(std::to_string(x)); }
        Row& col(bool x) { return raw(x ? "true" : "false"); }
        Row& col(const std::string& x) { return raw(x); }
        Row& col(const char* x) { return raw(x); }
        ~Row() { writer_.lines_.push_back(writer_.join(fields_)); }

    private:
        Row& raw(std::string f) {
            fields_.push_back(std::move(f));
            return *this;
        }
        CsvWriter& writer_;
        std::vector<std::string> fields_;
    };

    Row row() { return Row(*this); }

    std::string str() const {
        std::ostringstream out;
        for (const auto& l : lines_) out << l << '\n';
        return out.str();
    }

    void write_file(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ConfigError("cannot open output file: " + path);
        out << str();
        if (!out) throw ConfigError("failed writing output file: " + path);
    }

private:
    std::string join(const std::vector<std::string>& fields) const {
        std::string line;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) line += ',';
            line += fields[i];
        }
        return line;
    }

    std::vector<std::string> lines_;
    friend class Row;
};

} // namespace ellv
