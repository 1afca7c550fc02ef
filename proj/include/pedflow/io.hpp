#pragma once
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "pedflow/ensemble.hpp"

// Output plumbing. Primary CSVs are RFC-4180 (CRLF rows, quoting only where
// needed) with doubles printed as %.17g, so byte-level comparison across
// thread counts and reruns is meaningful. Snapshot series go to a flat
// binary file of doubles plus a JSON sidecar describing the layout.

namespace pedflow {

std::string format_double(double v);  // %.17g

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);

    void row(const std::vector<std::string>& cells);

    // Convenience cell constructors.
    static std::string cell(double v) { return format_double(v); }
    static std::string cell(std::uint64_t v) { return std::to_string(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(bool v) { return v ? "1" : "0"; }
    static std::string cell(const std::string& v) { return v; }

private:
    std::ofstream out_;
    std::string path_;
};

void ensure_dir(const std::string& path);

// One snapshot record is t followed by x[], y[], vx[], vy[] (n doubles
// each), records in step order. The sidecar <path>.json holds n, dt, and the
// step list.
void write_snapshot_series(const std::string& path,
                           const std::vector<std::pair<std::uint64_t, Ensemble>>& snaps,
                           double dt);

void write_text_file(const std::string& path, const std::string& content);

} // namespace pedflow
