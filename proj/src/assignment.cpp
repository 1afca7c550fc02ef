#include "pedflow/assignment.hpp"

#include <limits>
#include <stdexcept>

namespace pedflow {

AssignmentResult solve_assignment(const double* cost, std::size_t n_in) {
    if (n_in == 0) throw std::invalid_argument("solve_assignment: empty problem");
    const int n = static_cast<int>(n_in);
    constexpr double kBig = std::numeric_limits<double>::max();
    auto c = [&](int i, int j) { return cost[static_cast<std::size_t>(i) * n_in + j]; };

    std::vector<int> rowsol(n, -1), colsol(n, -1);
    std::vector<double> u(n, 0.0), v(n, 0.0);
    std::vector<int> free_rows(n), collist(n), pred(n), matches(n, 0);
    std::vector<double> d(n);

    // Column reduction, reverse order.
    for (int j = n - 1; j >= 0; --j) {
        double min = c(0, j);
        int imin = 0;
        for (int i = 1; i < n; ++i)
            if (c(i, j) < min) {
                min = c(i, j);
                imin = i;
            }
        v[j] = min;
        if (++matches[imin] == 1) {
            rowsol[imin] = j;
            colsol[j] = imin;
        }
    }

    // Reduction transfer from rows assigned exactly once.
    int numfree = 0;
    for (int i = 0; i < n; ++i) {
        if (matches[i] == 0) {
            free_rows[numfree++] = i;
        } else if (matches[i] == 1) {
            const int j1 = rowsol[i];
            double min = kBig;
            for (int j = 0; j < n; ++j)
                if (j != j1 && c(i, j) - v[j] < min) min = c(i, j) - v[j];
            if (min < kBig) v[j1] -= min;
        }
    }

    // Augmenting row reduction, two passes. Degenerate matrices (duplicate
    // rows, heavy cost ties) can make the strict-progress branch cycle once
    // the dual decrement underflows below one ulp of v, so each pass gets an
    // iteration budget; leftovers go to the shortest-path phase, which only
    // needs the invariant that assigned rows sit at their current row
    // minimum (every completed step below preserves it).
    bool budget_hit = false;
    for (int loop = 0; loop < 2 && !budget_hit; ++loop) {
        int k = 0;
        const int prvnumfree = numfree;
        const long budget = 50L * n + 1000;
        long iter = 0;
        numfree = 0;
        while (k < prvnumfree) {
            if (++iter > budget) {
                budget_hit = true;
                while (k < prvnumfree) free_rows[numfree++] = free_rows[k++];
                break;
            }
            const int i = free_rows[k];
            ++k;
            double umin = c(i, 0) - v[0], usubmin = kBig;
            int j1 = 0, j2 = -1;
            for (int j = 1; j < n; ++j) {
                const double h = c(i, j) - v[j];
                if (h < usubmin) {
                    if (h >= umin) {
                        usubmin = h;
                        j2 = j;
                    } else {
                        usubmin = umin;
                        umin = h;
                        j2 = j1;
                        j1 = j;
                    }
                }
            }
            int i0 = colsol[j1];
            if (umin < usubmin) {
                v[j1] -= usubmin - umin;
            } else if (i0 >= 0) {
                j1 = j2;
                i0 = colsol[j2];
            }
            rowsol[i] = j1;
            colsol[j1] = i;
            if (i0 >= 0) {
                if (umin < usubmin)
                    free_rows[--k] = i0;  // continue the path from the bumped row
                else
                    free_rows[numfree++] = i0;
            }
        }
    }

    // Shortest augmenting paths for the remaining free rows.
    for (int f = 0; f < numfree; ++f) {
        const int freerow = free_rows[f];
        for (int j = 0; j < n; ++j) {
            d[j] = c(freerow, j) - v[j];
            pred[j] = freerow;
            collist[j] = j;
        }
        int low = 0, up = 0, last = -1, endofpath = -1;
        double min = 0.0;
        bool found = false;
        do {
            if (up == low) {
                last = low - 1;
                min = d[collist[up++]];
                for (int k = up; k < n; ++k) {
                    const int j = collist[k];
                    const double h = d[j];
                    if (h <= min) {
                        if (h < min) {
                            up = low;
                            min = h;
                        }
                        collist[k] = collist[up];
                        collist[up++] = j;
                    }
                }
                for (int k = low; k < up; ++k)
                    if (colsol[collist[k]] < 0) {
                        endofpath = collist[k];
                        found = true;
                        break;
                    }
            }
            if (!found) {
                const int j1 = collist[low++];
                const int i = colsol[j1];
                const double h = c(i, j1) - v[j1] - min;
                for (int k = up; k < n; ++k) {
                    const int j = collist[k];
                    const double v2 = c(i, j) - v[j] - h;
                    if (v2 < d[j]) {
                        pred[j] = i;
                        if (v2 == min) {
                            if (colsol[j] < 0) {
                                endofpath = j;
                                found = true;
                                break;
                            }
                            collist[k] = collist[up];
                            collist[up++] = j;
                        }
                        d[j] = v2;
                    }
                }
            }
        } while (!found);

        // Scanned columns past `last` sit exactly at `min`, so their price
        // update would be zero; only the earlier ones move.
        for (int k = 0; k <= last; ++k) {
            const int j1 = collist[k];
            v[j1] += d[j1] - min;
        }
        int j0 = endofpath;
        for (;;) {
            const int i = pred[j0];
            colsol[j0] = i;
            const int j1 = j0;
            j0 = rowsol[i];
            rowsol[i] = j1;
            if (i == freerow) break;
        }
    }

    AssignmentResult res;
    res.row_to_col = std::move(rowsol);
    res.u.resize(n);
    res.v = std::move(v);
    for (int i = 0; i < n; ++i) {
        const int j = res.row_to_col[i];
        res.u[i] = c(i, j) - res.v[j];
        res.total += c(i, j);
    }
    return res;
}

} // namespace pedflow
