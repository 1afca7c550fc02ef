#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace pedflow {

// Uniform-grid neighbor index over particle positions, cell size = the
// interaction diameter. Cell lists are built by a stable counting sort, so
// candidate enumeration order (ascending cell id, ascending particle id
// within a cell) is deterministic and independent of thread count.
class SpatialHash {
public:
    void build(const double* px, const double* py, std::size_t n, double cell) {
        cell_ = cell;
        n_ = n;
        if (n == 0) {
            nx_ = ny_ = 0;
            start_.assign(1, 0);
            ids_.clear();
            return;
        }
        double lo_x = px[0], hi_x = px[0], lo_y = py[0], hi_y = py[0];
        for (std::size_t i = 1; i < n; ++i) {
            lo_x = std::min(lo_x, px[i]);
            hi_x = std::max(hi_x, px[i]);
            lo_y = std::min(lo_y, py[i]);
            hi_y = std::max(hi_y, py[i]);
        }
        x0_ = lo_x;
        y0_ = lo_y;
        nx_ = static_cast<int>((hi_x - lo_x) / cell) + 1;
        ny_ = static_cast<int>((hi_y - lo_y) / cell) + 1;

        const std::size_t ncells = static_cast<std::size_t>(nx_) * ny_;
        cell_of_.resize(n);
        start_.assign(ncells + 1, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::uint32_t c = cell_index(px[i], py[i]);
            cell_of_[i] = c;
            ++start_[c + 1];
        }
        for (std::size_t c = 0; c < ncells; ++c) start_[c + 1] += start_[c];
        ids_.resize(n);
        std::vector<std::uint32_t> cursor(start_.begin(), start_.end() - 1);
        for (std::size_t i = 0; i < n; ++i)
            ids_[cursor[cell_of_[i]]++] = static_cast<std::uint32_t>(i);
    }

    // Candidate sources for a query point: all particles in the 3x3 cell
    // block around it (complete for interactions of range <= cell size).
    // `exclude` omits one id (pass npos for cross-ensemble queries).
    void gather(double x, double y, std::uint32_t exclude,
                std::vector<std::uint32_t>& out) const {
        out.clear();
        if (n_ == 0) return;
        const int cx = clamp_cx(x);
        const int cy = clamp_cy(y);
        for (int jy = std::max(0, cy - 1); jy <= std::min(ny_ - 1, cy + 1); ++jy) {
            for (int jx = std::max(0, cx - 1); jx <= std::min(nx_ - 1, cx + 1); ++jx) {
                const std::size_t c = static_cast<std::size_t>(jy) * nx_ + jx;
                for (std::uint32_t k = start_[c]; k < start_[c + 1]; ++k)
                    if (ids_[k] != exclude) out.push_back(ids_[k]);
            }
        }
    }

    static constexpr std::uint32_t npos = 0xFFFFFFFFu;

private:
    std::uint32_t cell_index(double x, double y) const {
        const int cx = clamp_cx(x);
        const int cy = clamp_cy(y);
        return static_cast<std::uint32_t>(cy) * nx_ + cx;
    }
    int clamp_cx(double x) const {
        return std::clamp(static_cast<int>((x - x0_) / cell_), 0, nx_ - 1);
    }
    int clamp_cy(double y) const {
        return std::clamp(static_cast<int>((y - y0_) / cell_), 0, ny_ - 1);
    }

    double cell_ = 1.0, x0_ = 0.0, y0_ = 0.0;
    int nx_ = 0, ny_ = 0;
    std::size_t n_ = 0;
    std::vector<std::uint32_t> cell_of_;
    std::vector<std::uint32_t> start_;
    std::vector<std::uint32_t> ids_;
};

} // namespace pedflow
