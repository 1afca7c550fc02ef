#pragma once
#include <cstddef>
#include <vector>

namespace pedflow {

// Minimum-cost perfect matching on a dense n x n cost matrix (row-major,
// finite entries). Jonker-Volgenant: column reduction, two augmenting row
// reduction passes, then shortest augmenting paths for whatever is left.
//
// The duals certify optimality: u[i] + v[j] <= cost[i*n+j] up to round-off,
// with equality on matched pairs, and total == sum(u) + sum(v).
struct AssignmentResult {
    std::vector<int> row_to_col;
    std::vector<double> u, v;
    double total = 0.0;
};

AssignmentResult solve_assignment(const double* cost, std::size_t n);

} // namespace pedflow
