#pragma once

// CSV emission with a '#'-prefixed metadata block. Formatting is done with
// snprintf so identical inputs always produce byte-identical files.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace nenu {

inline std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// FNV-1a 64-bit, used as the commit-agnostic parameter hash in report headers.
inline uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(uint64_t v) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

class CsvWriter {
public:
    CsvWriter& meta(const std::string& key, const std::string& value) {
        meta_ << "# " << key << "=" << value << "\n";
        return *this;
    }
    CsvWriter& meta(const std::string& key, double value) { return meta(key, fmt_double(value)); }
    CsvWriter& meta(const std::string& key, long value) { return meta(key, std::to_string(value)); }
    CsvWriter& meta(const std::string& key, uint64_t value) { return meta(key, std::to_string(value)); }
    CsvWriter& meta(const std::string& key, int value) { return meta(key, std::to_string(value)); }

    CsvWriter& header(const std::vector<std::string>& cols) {
        for (size_t i = 0; i < cols.size(); ++i) body_ << (i ? "," : "") << cols[i];
        body_ << "\n";
        return *this;
    }

    CsvWriter& row(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) body_ << (i ? "," : "") << cells[i];
        body_ << "\n";
        return *this;
    }

    std::string str() const { return meta_.str() + body_.str(); }

    void write(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("CsvWriter: cannot open " + path);
        os << str();
    }

private:
    std::ostringstream meta_;
    std::ostringstream body_;
};

} // namespace nenu
