#include "pedflow/io.hpp"

#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include <json.hpp>

namespace pedflow {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw std::runtime_error("cannot open for writing: " + path);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        const std::string& c = cells[i];
        if (c.find_first_of(",\"\r\n") != std::string::npos) {
            out_ << '"';
            for (const char ch : c) {
                if (ch == '"') out_ << '"';
                out_ << ch;
            }
            out_ << '"';
        } else {
            out_ << c;
        }
    }
    out_ << "\r\n";
    if (!out_) throw std::runtime_error("write failed: " + path_);
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw std::runtime_error("cannot create directory " + path + ": " + ec.message());
}

void write_snapshot_series(const std::string& path,
                           const std::vector<std::pair<std::uint64_t, Ensemble>>& snaps,
                           double dt) {
    std::ofstream bin(path, std::ios::binary);
    if (!bin) throw std::runtime_error("cannot open for writing: " + path);
    nlohmann::json steps = nlohmann::json::array();
    std::size_t n = 0;
    for (const auto& [step, e] : snaps) {
        n = e.size();
        const double t = static_cast<double>(step) * dt;
        bin.write(reinterpret_cast<const char*>(&t), sizeof(double));
        auto dump = [&](const std::vector<double>& col) {
            bin.write(reinterpret_cast<const char*>(col.data()),
                      static_cast<std::streamsize>(col.size() * sizeof(double)));
        };
        dump(e.px);
        dump(e.py);
        dump(e.vx);
        dump(e.vy);
        steps.push_back(step);
    }
    if (!bin) throw std::runtime_error("write failed: " + path);

    nlohmann::json header;
    header["format"] = "record = t, x[n], y[n], vx[n], vy[n]; doubles, native endian";
    header["n"] = n;
    header["dt"] = dt;
    header["records"] = snaps.size();
    header["steps"] = steps;
    write_text_file(path + ".json", header.dump(2) + "\n");
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace pedflow
