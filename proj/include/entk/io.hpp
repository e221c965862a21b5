#pragma once

#include "entk/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace entk {

using Json = nlohmann::json;

// Fixed formatting (shortest round-trip) keeps output files byte-reproducible.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvWriter {
    explicit CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& cols)
        : out_(path) {
        if (!out_) throw DomainError("cannot open for writing: " + path.string());
        for (std::size_t i = 0; i < cols.size(); ++i)
            out_ << (i ? "," : "") << cols[i];
        out_ << "\n";
    }
    void row(const std::vector<double>& vals) {
        for (std::size_t i = 0; i < vals.size(); ++i)
            out_ << (i ? "," : "") << format_double(vals[i]);
        out_ << "\n";
    }
    void row_mixed(const std::vector<std::string>& vals) {
        for (std::size_t i = 0; i < vals.size(); ++i) out_ << (i ? "," : "") << vals[i];
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

// Tensors serialize as row-major nested arrays with an explicit shape header.
inline Json matrix_to_json(const Mat& m) {
    Json data = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        data.push_back(std::move(row));
    }
    return Json{{"shape", {m.rows(), m.cols()}}, {"data", std::move(data)}};
}

inline Mat matrix_from_json(const Json& j) {
    const auto shape = j.at("shape");
    Mat m(shape.at(0).get<Eigen::Index>(), shape.at(1).get<Eigen::Index>());
    const auto& data = j.at("data");
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index jj = 0; jj < m.cols(); ++jj) m(i, jj) = data.at(i).at(jj);
    return m;
}

inline Json two_time_to_json(const TwoTime& t) {
    Json data = Json::array();
    for (int mu = 0; mu < t.P(); ++mu) {
        Json d1 = Json::array();
        for (int tt = 0; tt < t.T(); ++tt) {
            Json d2 = Json::array();
            for (int nu = 0; nu < t.P(); ++nu) {
                Json d3 = Json::array();
                for (int s = 0; s < t.T(); ++s) d3.push_back(t(mu, tt, nu, s));
                d2.push_back(std::move(d3));
            }
            d1.push_back(std::move(d2));
        }
        data.push_back(std::move(d1));
    }
    return Json{{"shape", {t.P(), t.T(), t.P(), t.T()}}, {"data", std::move(data)}};
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw DomainError("cannot open for writing: " + path.string());
    out << j.dump(1) << "\n";
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw DomainError("cannot open for writing: " + path.string());
    out << text;
}

// FNV-1a content hash for the result manifest.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t hash_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DomainError("cannot open for hashing: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a(ss.str());
}

inline std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Minimal CSV reader for user-supplied datasets (numeric cells only).
inline std::vector<std::vector<double>> read_csv_numeric(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open: " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (...) {
                numeric = false;
                break;
            }
        }
        if (!numeric) continue;  // header line
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace entk
