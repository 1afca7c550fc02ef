#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "pedflow/assignment.hpp"
#include "pedflow/rng.hpp"

using namespace pedflow;

namespace {

// Exhaustive minimum over all permutations, n <= 8.
double brute_min_cost(const std::vector<double>& cost, std::size_t n) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double tot = 0.0;
        for (std::size_t i = 0; i < n; ++i) tot += cost[i * n + perm[i]];
        best = std::min(best, tot);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

double matched_total(const std::vector<double>& cost, const AssignmentResult& res,
                     std::size_t n) {
    double tot = 0.0;
    for (std::size_t i = 0; i < n; ++i) tot += cost[i * n + res.row_to_col[i]];
    return tot;
}

// row_to_col must be a permutation and the duals must certify optimality.
void check_certificate(const std::vector<double>& cost, const AssignmentResult& res,
                       std::size_t n, double tol) {
    std::vector<char> seen(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        REQUIRE(res.row_to_col[i] >= 0);
        REQUIRE(res.row_to_col[i] < static_cast<int>(n));
        CHECK(!seen[res.row_to_col[i]]);
        seen[res.row_to_col[i]] = 1;
    }
    double min_slack = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            min_slack = std::min(min_slack, cost[i * n + j] - res.u[i] - res.v[j]);
    CHECK(min_slack >= -tol);
    const double dual = std::accumulate(res.u.begin(), res.u.end(), 0.0) +
                        std::accumulate(res.v.begin(), res.v.end(), 0.0);
    CHECK(std::abs(res.total - dual) <= tol * std::max(1.0, std::abs(res.total)));
    CHECK(std::abs(res.total - matched_total(cost, res, n)) <=
          tol * std::max(1.0, std::abs(res.total)));
}

} // namespace

TEST_SUITE("assignment") {

TEST_CASE("tiny matrices") {
    {
        const std::vector<double> c = {3.5};
        const auto res = solve_assignment(c.data(), 1);
        CHECK(res.row_to_col[0] == 0);
        CHECK(res.total == doctest::Approx(3.5));
    }
    {
        // Diagonal is the trap; anti-diagonal is cheaper.
        const std::vector<double> c = {1.0, 0.2, 0.3, 1.0};
        const auto res = solve_assignment(c.data(), 2);
        CHECK(res.row_to_col[0] == 1);
        CHECK(res.row_to_col[1] == 0);
        CHECK(res.total == doctest::Approx(0.5));
        check_certificate(c, res, 2, 1e-12);
    }
}

TEST_CASE("matches brute force on random matrices") {
    for (std::uint64_t trial = 0; trial < 40; ++trial) {
        const std::size_t n = 2 + trial % 6;  // up to 7
        CounterRng rng(1000 + trial, StreamPurpose::scratch, 0, 0);
        std::vector<double> c(n * n);
        for (double& v : c) v = rng.uniform01() * 10.0;
        const auto res = solve_assignment(c.data(), n);
        const double want = brute_min_cost(c, n);
        CHECK(res.total == doctest::Approx(want).epsilon(1e-12));
        check_certificate(c, res, n, 1e-9);
    }
}

TEST_CASE("quantized costs with massive ties") {
    // Costs on a 0.5 grid produce many equal alternatives; any optimal
    // matching is acceptable but the total and certificate are unique.
    for (std::uint64_t trial = 0; trial < 24; ++trial) {
        const std::size_t n = 3 + trial % 5;  // up to 7
        CounterRng rng(2000 + trial, StreamPurpose::scratch, 1, 0);
        std::vector<double> c(n * n);
        for (double& v : c) v = 0.5 * std::floor(rng.uniform01() * 5.0);
        const auto res = solve_assignment(c.data(), n);
        CHECK(res.total == doctest::Approx(brute_min_cost(c, n)).epsilon(1e-12));
        check_certificate(c, res, n, 1e-9);
    }
}

TEST_CASE("duplicate rows and columns stay solvable") {
    // With-replacement subsampling produces repeated rows/columns; these
    // drove the augmenting-row-reduction phase into a stall before the pass
    // budget was added. The certificate must still hold.
    for (std::uint64_t trial = 0; trial < 12; ++trial) {
        const std::size_t base = 5, n = 60;
        CounterRng rng(3000 + trial, StreamPurpose::scratch, 2, 0);
        std::vector<double> pool(base * base);
        for (double& v : pool) v = std::min(2.0, 3.0 * rng.uniform01());
        std::vector<std::size_t> ri(n), ci(n);
        for (std::size_t k = 0; k < n; ++k) {
            ri[k] = static_cast<std::size_t>(rng.uniform01() * base) % base;
            ci[k] = static_cast<std::size_t>(rng.uniform01() * base) % base;
        }
        std::vector<double> c(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) c[i * n + j] = pool[ri[i] * base + ci[j]];
        const auto res = solve_assignment(c.data(), n);
        check_certificate(c, res, n, 1e-6);
    }
}

TEST_CASE("brute force agrees on small duplicate-row matrices") {
    for (std::uint64_t trial = 0; trial < 16; ++trial) {
        const std::size_t n = 6;
        CounterRng rng(4000 + trial, StreamPurpose::scratch, 3, 0);
        std::vector<double> row(n);
        for (double& v : row) v = std::floor(rng.uniform01() * 4.0);
        std::vector<double> c(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                c[i * n + j] = (i < 3) ? row[j] : std::floor(rng.uniform01() * 4.0);
        const auto res = solve_assignment(c.data(), n);
        CHECK(res.total == doctest::Approx(brute_min_cost(c, n)).epsilon(1e-12));
        check_certificate(c, res, n, 1e-9);
    }
}

TEST_CASE("dual certificate on larger random instances") {
    for (std::uint64_t trial = 0; trial < 4; ++trial) {
        const std::size_t n = 60;
        CounterRng rng(5000 + trial, StreamPurpose::scratch, 4, 0);
        std::vector<double> c(n * n);
        for (double& v : c) v = rng.uniform01() * 4.0;
        const auto res = solve_assignment(c.data(), n);
        check_certificate(c, res, n, 1e-9);
    }
}

} // TEST_SUITE
