#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "rvos/matching.hpp"

using rvos::Assignment;
using rvos::BBox;
using rvos::CostMatrix;
using rvos::GroundTruthObject;
using rvos::LabeledPoint;
using rvos::ObjectPrediction;

namespace {

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

CostMatrix make_matrix(const std::vector<std::vector<double>>& rows) {
    const std::size_t k = rows.size();
    const std::size_t n = k > 0 ? rows[0].size() : 0;
    std::vector<double> entries;
    for (const auto& r : rows) {
        entries.insert(entries.end(), r.begin(), r.end());
    }
    return CostMatrix(k, n, std::move(entries));
}

// Exhaustive minimum over all injections of the smaller side, keeping the
// lexicographically smallest pair list among cost ties.
std::pair<double, Pairs> brute_force(const std::vector<std::vector<double>>& c) {
    const std::size_t k = c.size();
    const std::size_t n = k > 0 ? c[0].size() : 0;
    if (k == 0 || n == 0) {
        return {0.0, {}};
    }
    double best_cost = std::numeric_limits<double>::infinity();
    Pairs best_pairs;
    const auto consider = [&](Pairs pairs) {
        std::sort(pairs.begin(), pairs.end());
        double cost = 0.0;
        for (const auto& [r, col] : pairs) cost += c[r][col];
        if (cost < best_cost || (cost == best_cost && pairs < best_pairs)) {
            best_cost = cost;
            best_pairs = std::move(pairs);
        }
    };
    if (k <= n) {
        std::vector<std::size_t> cols(n);
        std::iota(cols.begin(), cols.end(), std::size_t{0});
        do {
            Pairs pairs;
            for (std::size_t i = 0; i < k; ++i) pairs.emplace_back(i, cols[i]);
            consider(std::move(pairs));
        } while (std::next_permutation(cols.begin(), cols.end()));
    } else {
        std::vector<std::size_t> rows(k);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        do {
            Pairs pairs;
            for (std::size_t j = 0; j < n; ++j) pairs.emplace_back(rows[j], j);
            consider(std::move(pairs));
        } while (std::next_permutation(rows.begin(), rows.end()));
    }
    return {best_cost, best_pairs};
}

}  // namespace

TEST_CASE("hungarian on fixed matrices") {
    SUBCASE("1x1") {
        const auto a = rvos::hungarian(make_matrix({{0.0}}));
        CHECK(a.pairs == Pairs{{0, 0}});
        CHECK(a.total_cost == doctest::Approx(0.0));
    }
    SUBCASE("2x2 diagonal optimum") {
        const auto a = rvos::hungarian(make_matrix({{1, 2}, {3, 1}}));
        CHECK(a.pairs == Pairs{{0, 0}, {1, 1}});
        CHECK(a.total_cost == doctest::Approx(2.0));
    }
    SUBCASE("2x3 rectangular") {
        const auto a = rvos::hungarian(make_matrix({{5, 1, 9}, {1, 9, 9}}));
        CHECK(a.pairs == Pairs{{0, 1}, {1, 0}});
        CHECK(a.total_cost == doctest::Approx(2.0));
    }
    SUBCASE("3x2 drops one row") {
        const auto a = rvos::hungarian(make_matrix({{9, 9}, {1, 9}, {9, 1}}));
        CHECK(a.pairs == Pairs{{1, 0}, {2, 1}});
        CHECK(a.total_cost == doctest::Approx(2.0));
    }
    SUBCASE("empty matrix") {
        const auto a = rvos::hungarian(CostMatrix(0, 3, {}));
        CHECK(a.pairs.empty());
        CHECK(a.total_cost == 0.0);
    }
    SUBCASE("non-finite entries rejected") {
        CHECK_THROWS_AS(CostMatrix(1, 1, {std::numeric_limits<double>::quiet_NaN()}),
                        rvos::NonFiniteCostError);
        CHECK_THROWS_AS(CostMatrix(1, 1, {std::numeric_limits<double>::infinity()}),
                        rvos::NonFiniteCostError);
    }
}

TEST_CASE("hungarian equals brute force on random matrices") {
    std::mt19937 rng(1234);
    std::uniform_int_distribution<std::size_t> dim(1, 7);
    std::uniform_real_distribution<double> entry(0.0, 100.0);
    for (int trial = 0; trial < 600; ++trial) {
        const std::size_t k = dim(rng);
        const std::size_t n = dim(rng);
        std::vector<std::vector<double>> c(k, std::vector<double>(n));
        for (auto& row : c) {
            for (auto& e : row) e = entry(rng);
        }
        const auto [want_cost, want_pairs] = brute_force(c);
        const auto got = rvos::hungarian(make_matrix(c));
        CHECK(got.total_cost == want_cost);
        CHECK(got.pairs == want_pairs);
    }
}

TEST_CASE("lexicographic tie-breaking") {
    SUBCASE("uniform matrix picks the identity prefix") {
        const auto a = rvos::hungarian(make_matrix({{1, 1}, {1, 1}}));
        CHECK(a.pairs == Pairs{{0, 0}, {1, 1}});
    }
    SUBCASE("anti-diagonal tie") {
        // Both permutations cost 2; [(0,0),(1,1)] is lexicographically first.
        const auto a = rvos::hungarian(make_matrix({{1, 1}, {1, 1}}));
        CHECK(a.total_cost == doctest::Approx(2.0));
        CHECK(a.pairs.front() == std::pair<std::size_t, std::size_t>{0, 0});
    }
    SUBCASE("small integer matrices agree with brute force pair lists") {
        std::mt19937 rng(555);
        std::uniform_int_distribution<std::size_t> dim(1, 6);
        std::uniform_int_distribution<int> entry(0, 3);
        for (int trial = 0; trial < 400; ++trial) {
            const std::size_t k = dim(rng);
            const std::size_t n = dim(rng);
            std::vector<std::vector<double>> c(k, std::vector<double>(n));
            for (auto& row : c) {
                for (auto& e : row) e = entry(rng);
            }
            const auto [want_cost, want_pairs] = brute_force(c);
            const auto got = rvos::hungarian(make_matrix(c));
            CHECK(got.total_cost == want_cost);
            CHECK(got.pairs == want_pairs);
        }
    }
}

TEST_CASE("hungarian invariances") {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> entry(0.0, 100.0);

    SUBCASE("row permutation permutes the assignment") {
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t k = 4, n = 5;
            std::vector<std::vector<double>> c(k, std::vector<double>(n));
            for (auto& row : c) {
                for (auto& e : row) e = entry(rng);
            }
            std::vector<std::size_t> perm(k);
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            std::shuffle(perm.begin(), perm.end(), rng);
            std::vector<std::vector<double>> p(k);
            for (std::size_t i = 0; i < k; ++i) p[i] = c[perm[i]];

            const auto base = rvos::hungarian(make_matrix(c));
            const auto permuted = rvos::hungarian(make_matrix(p));
            CHECK(permuted.total_cost == doctest::Approx(base.total_cost).epsilon(1e-12));

            Pairs mapped;
            for (const auto& [r, col] : permuted.pairs) mapped.emplace_back(perm[r], col);
            std::sort(mapped.begin(), mapped.end());
            CHECK(mapped == base.pairs);
        }
    }
    SUBCASE("constant shift keeps the square-matrix argmin") {
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t n = 5;
            std::vector<std::vector<double>> c(n, std::vector<double>(n));
            for (auto& row : c) {
                for (auto& e : row) e = entry(rng);
            }
            auto shifted = c;
            for (auto& row : shifted) {
                for (auto& e : row) e += 17.0;
            }
            CHECK(rvos::hungarian(make_matrix(shifted)).pairs ==
                  rvos::hungarian(make_matrix(c)).pairs);
        }
    }
}

TEST_CASE("match_objects") {
    const auto pred_at = [](int x, int y, int size) {
        ObjectPrediction p;
        p.bbox = BBox{x, y, x + size - 1, y + size - 1};
        p.point_pos = LabeledPoint{x + size / 2, y + size / 2, 1};
        return p;
    };
    const auto gt_at = [](int x, int y, int size) {
        GroundTruthObject g;
        g.bbox = BBox{x, y, x + size - 1, y + size - 1};
        g.center = LabeledPoint{x + size / 2, y + size / 2, 1};
        return g;
    };

    SUBCASE("empty sides") {
        CHECK(rvos::match_objects({}, {gt_at(0, 0, 4)}, rvos::MatchCost::one_minus_bbox_iou)
                  .pairs.empty());
        CHECK(rvos::match_objects({pred_at(0, 0, 4)}, {}, rvos::MatchCost::one_minus_bbox_iou)
                  .pairs.empty());
    }
    SUBCASE("identity pair") {
        const auto a = rvos::match_objects({pred_at(0, 0, 10)}, {gt_at(0, 0, 10)},
                                           rvos::MatchCost::one_minus_bbox_iou);
        CHECK(a.pairs == Pairs{{0, 0}});
        CHECK(a.total_cost == doctest::Approx(0.0));
    }
    SUBCASE("crossed pairs resolve to the exact matches") {
        const auto a = rvos::match_objects({pred_at(50, 50, 10), pred_at(0, 0, 10)},
                                           {gt_at(0, 0, 10), gt_at(50, 50, 10)},
                                           rvos::MatchCost::one_minus_bbox_iou);
        CHECK(a.pairs == Pairs{{0, 1}, {1, 0}});
        CHECK(a.total_cost == doctest::Approx(0.0));
    }
    SUBCASE("point cost uses point_pos against the GT center") {
        auto p0 = pred_at(0, 0, 4);
        p0.point_pos = LabeledPoint{100, 100, 1};
        auto p1 = pred_at(0, 0, 4);
        p1.point_pos = LabeledPoint{2, 2, 1};
        const auto a =
            rvos::match_objects({p0, p1}, {gt_at(95, 95, 10), gt_at(0, 0, 5)},
                                rvos::MatchCost::point_l1);
        CHECK(a.pairs == Pairs{{0, 0}, {1, 1}});
    }
}
