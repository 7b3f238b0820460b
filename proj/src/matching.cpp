#include "rvos/matching.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace rvos {

namespace {

// Square Kuhn-Munkres with potentials, O(n^3). Returns row -> col.
std::vector<int> solve_square(const std::vector<double>& a, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0);
    std::vector<double> v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0);
    std::vector<int> way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j) {
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    }
    return row_to_col;
}

using Pair = std::pair<std::size_t, std::size_t>;

// Optimal pairs over a row/col subset; rectangular handled by padding with
// a constant larger than any real entry, so padded pairs never displace a
// real edge and can be dropped.
std::vector<Pair> solve_subproblem(const CostMatrix& c, const std::vector<std::size_t>& rows,
                                   const std::vector<std::size_t>& cols) {
    const std::size_t k = rows.size();
    const std::size_t l = cols.size();
    const std::size_t n = std::max(k, l);
    if (n == 0 || k == 0 || l == 0) {
        return {};
    }
    double max_entry = 0.0;
    for (const auto r : rows) {
        for (const auto col : cols) {
            max_entry = std::max(max_entry, c.at(r, col));
        }
    }
    const double pad = (max_entry + 1.0) * static_cast<double>(n);
    std::vector<double> a(n * n, pad);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < l; ++j) {
            a[i * n + j] = c.at(rows[i], cols[j]);
        }
    }
    const auto row_to_col = solve_square(a, static_cast<int>(n));
    std::vector<Pair> pairs;
    for (std::size_t i = 0; i < k; ++i) {
        const int j = row_to_col[i];
        if (j >= 0 && static_cast<std::size_t>(j) < l) {
            pairs.emplace_back(rows[i], cols[static_cast<std::size_t>(j)]);
        }
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

double row_ordered_sum(const CostMatrix& c, std::vector<Pair> pairs) {
    std::sort(pairs.begin(), pairs.end());
    double total = 0.0;
    for (const auto& [r, col] : pairs) {
        total += c.at(r, col);
    }
    return total;
}

}  // namespace

CostMatrix::CostMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (entries_.size() != rows_ * cols_) {
        throw NonFiniteCostError("cost matrix entry count does not match shape");
    }
    for (const double e : entries_) {
        if (!std::isfinite(e)) {
            throw NonFiniteCostError("cost matrix entries must be finite");
        }
    }
}

Assignment hungarian(const CostMatrix& c) {
    Assignment out;
    const std::size_t k = c.rows();
    const std::size_t n = c.cols();
    if (k == 0 || n == 0) {
        return out;
    }
    std::vector<std::size_t> all_rows(k);
    std::vector<std::size_t> all_cols(n);
    for (std::size_t i = 0; i < k; ++i) all_rows[i] = i;
    for (std::size_t j = 0; j < n; ++j) all_cols[j] = j;

    const double best = row_ordered_sum(c, solve_subproblem(c, all_rows, all_cols));
    const std::size_t m = std::min(k, n);

    // Greedy prefix fixing: walk rows in order and keep the smallest column
    // that still completes to an optimum, which yields the lexicographically
    // smallest optimal pair list. Each probe re-solves the remaining
    // subproblem, fine for the object counts seen here.
    std::vector<Pair> fixed;
    std::vector<char> col_used(n, 0);
    for (std::size_t r = 0; r < k && fixed.size() < m; ++r) {
        std::vector<std::size_t> rows_after;
        for (std::size_t i = r + 1; i < k; ++i) rows_after.push_back(i);

        bool matched = false;
        for (std::size_t col = 0; col < n; ++col) {
            if (col_used[col]) continue;
            std::vector<std::size_t> cols_left;
            for (std::size_t j = 0; j < n; ++j) {
                if (!col_used[j] && j != col) cols_left.push_back(j);
            }
            auto candidate = solve_subproblem(c, rows_after, cols_left);
            candidate.emplace_back(r, col);
            for (const auto& p : fixed) candidate.push_back(p);
            if (candidate.size() == m && row_ordered_sum(c, candidate) == best) {
                fixed.emplace_back(r, col);
                col_used[col] = 1;
                matched = true;
                break;
            }
        }
        // No column keeps the optimum: this row stays unmatched, which can
        // only happen with more predictions than ground truths.
        assert(matched || k > n);
        (void)matched;
    }
    assert(fixed.size() == m);
    std::sort(fixed.begin(), fixed.end());
    out.pairs = std::move(fixed);
    out.total_cost = best;
    return out;
}

Assignment match_objects(const std::vector<ObjectPrediction>& preds,
                         const std::vector<GroundTruthObject>& gts, MatchCost cost) {
    const std::size_t k = preds.size();
    const std::size_t n = gts.size();
    if (k == 0 || n == 0) {
        return {};
    }
    std::vector<double> entries(k * n, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double v = 0.0;
            switch (cost) {
                case MatchCost::one_minus_bbox_iou:
                    v = 1.0 - bbox_iou(preds[i].bbox, gts[j].bbox);
                    break;
                case MatchCost::bbox_l1:
                    v = bbox_l1(preds[i].bbox, gts[j].bbox);
                    break;
                case MatchCost::point_l1:
                    v = static_cast<double>(point_l1(preds[i].point_pos, gts[j].center));
                    break;
            }
            entries[i * n + j] = v;
        }
    }
    return hungarian(CostMatrix(k, n, std::move(entries)));
}

}  // namespace rvos
