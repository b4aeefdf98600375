#include "vplab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "vplab/rng.hpp"

namespace vplab {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr double kInf = std::numeric_limits<double>::infinity();

double distance6(const Point6& a, const Point6& b) {
    double s = 0.0;
    for (int k = 0; k < 6; ++k) {
        const double d = a[k] - b[k];
        s += d * d;
    }
    return std::sqrt(s);
}

double ground_cost(const Point6& a, const Point6& b, double p) {
    if (p == 2.0) {
        double s = 0.0;
        for (int k = 0; k < 6; ++k) {
            const double d = a[k] - b[k];
            s += d * d;
        }
        return s;
    }
    const double d = distance6(a, b);
    return p == 1.0 ? d : std::pow(d, p);
}


// Among optimal assignments (perfect matchings on the edges with zero reduced
// cost), picks the lexicographically smallest one, row by row.
void canonicalize_ties(std::span<const double> cost, std::size_t n, const std::vector<double>& v,
                       std::vector<std::size_t>& rowsol, std::vector<std::size_t>& colsol) {
    std::vector<std::vector<std::size_t>> tight(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = cost[i * n + rowsol[i]] - v[rowsol[i]];
        for (std::size_t j = 0; j < n; ++j) {
            const double c = cost[i * n + j];
            const double slack = 1e-12 * (std::abs(c) + std::abs(u) + std::abs(v[j]));
            if (c - u - v[j] <= slack) tight[i].push_back(j);
        }
    }
    std::vector<std::size_t> parent_row(n), seen(n, kNone);
    std::vector<std::size_t> queue;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j0 = rowsol[i];
        for (const std::size_t j : tight[i]) {
            if (j >= j0) break;
            const std::size_t r = colsol[j];
            if (r < i) continue;
            // Alternating path: r gives up j, ..., someone takes j0.
            queue.assign(1, r);
            seen[r] = i * n + j;
            std::size_t end_row = kNone;
            for (std::size_t head = 0; head < queue.size() && end_row == kNone; ++head) {
                const std::size_t x = queue[head];
                for (const std::size_t y : tight[x]) {
                    if (y == j || y == rowsol[x]) continue;
                    if (y == j0) {
                        end_row = x;
                        break;
                    }
                    const std::size_t w = colsol[y];
                    if (w <= i || seen[w] == i * n + j) continue;
                    seen[w] = i * n + j;
                    parent_row[w] = x;
                    queue.push_back(w);
                }
            }
            if (end_row == kNone) continue;
            std::size_t take = j0;
            for (std::size_t x = end_row;;) {
                const std::size_t released = rowsol[x];
                rowsol[x] = take;
                colsol[take] = x;
                if (x == r) break;
                take = released;
                x = parent_row[x];
            }
            rowsol[i] = j;
            colsol[j] = i;
            break;
        }
    }
}

}  // namespace

Matching solve_assignment(std::span<const double> cost, std::size_t n) {
    if (cost.size() != n * n) throw DomainError("solve_assignment: cost matrix is not n x n");
    Matching out;
    if (n == 0) return out;
    auto c = [&](std::size_t i, std::size_t j) { return cost[i * n + j]; };

    std::vector<std::size_t> rowsol(n, kNone), colsol(n, kNone);
    std::vector<double> v(n, 0.0);
    std::vector<std::size_t> free_rows;
    free_rows.reserve(n);

    // Column reduction, scanning columns in reverse.
    {
        std::vector<unsigned> matches(n, 0);
        for (std::size_t jj = n; jj-- > 0;) {
            std::size_t imin = 0;
            double best = c(0, jj);
            for (std::size_t i = 1; i < n; ++i) {
                if (c(i, jj) < best) {
                    best = c(i, jj);
                    imin = i;
                }
            }
            v[jj] = best;
            if (++matches[imin] == 1) {
                rowsol[imin] = jj;
                colsol[jj] = imin;
            } else if (v[jj] < v[rowsol[imin]]) {
                const std::size_t j1 = rowsol[imin];
                rowsol[imin] = jj;
                colsol[jj] = imin;
                colsol[j1] = kNone;
            } else {
                colsol[jj] = kNone;
            }
        }
        // Reduction transfer.
        for (std::size_t i = 0; i < n; ++i) {
            if (matches[i] == 0) {
                free_rows.push_back(i);
            } else if (matches[i] == 1) {
                const std::size_t j1 = rowsol[i];
                double m = kInf;
                for (std::size_t j = 0; j < n; ++j) {
                    if (j != j1) m = std::min(m, c(i, j) - v[j]);
                }
                if (std::isfinite(m)) v[j1] -= m;
            }
        }
        // Rows matched more than once keep only their last column; the rest
        // are already free through colsol.
        for (std::size_t i = 0; i < n; ++i) {
            if (matches[i] > 1 && colsol[rowsol[i]] != i) rowsol[i] = kNone;
        }
    }

    // Augmenting row reduction, two passes, with a work cap: floating-point
    // near-ties can make the classic loop crawl.
    for (int pass = 0; pass < 2 && !free_rows.empty(); ++pass) {
        std::vector<std::size_t> current;
        current.swap(free_rows);
        std::size_t k = 0;
        std::size_t budget = 8 * n + 16;
        while (k < current.size()) {
            if (budget-- == 0) {
                free_rows.insert(free_rows.end(), current.begin() + static_cast<std::ptrdiff_t>(k), current.end());
                break;
            }
            const std::size_t i = current[k++];
            double umin = c(i, 0) - v[0];
            std::size_t j1 = 0, j2 = kNone;
            double usubmin = kInf;
            for (std::size_t j = 1; j < n; ++j) {
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
            std::size_t i0 = colsol[j1];
            const bool strict = umin < usubmin;
            if (strict) {
                if (std::isfinite(usubmin)) v[j1] -= usubmin - umin;
            } else if (i0 != kNone && j2 != kNone) {
                j1 = j2;
                i0 = colsol[j2];
            }
            if (i0 != kNone) rowsol[i0] = kNone;
            rowsol[i] = j1;
            colsol[j1] = i;
            if (i0 != kNone) {
                if (strict) {
                    current[--k] = i0;
                } else {
                    free_rows.push_back(i0);
                }
            }
        }
    }

    // Augmentation: Dijkstra-like shortest path from each remaining free row.
    std::vector<double> d(n);
    std::vector<std::size_t> pred(n), collist(n);
    for (const std::size_t freerow : free_rows) {
        for (std::size_t j = 0; j < n; ++j) {
            d[j] = c(freerow, j) - v[j];
            pred[j] = freerow;
            collist[j] = j;
        }
        std::size_t low = 0, up = 0, last = 0, endofpath = kNone;
        double dmin = 0.0;
        bool found = false;
        do {
            if (up == low) {
                last = low;  // columns [0, last) are scanned and final
                dmin = d[collist[up++]];
                for (std::size_t k = up; k < n; ++k) {
                    const std::size_t j = collist[k];
                    const double h = d[j];
                    if (h <= dmin) {
                        if (h < dmin) {
                            up = low;
                            dmin = h;
                        }
                        collist[k] = collist[up];
                        collist[up++] = j;
                    }
                }
                for (std::size_t k = low; k < up; ++k) {
                    if (colsol[collist[k]] == kNone) {
                        endofpath = collist[k];
                        found = true;
                        break;
                    }
                }
            }
            if (!found) {
                const std::size_t j1 = collist[low++];
                const std::size_t i = colsol[j1];
                const double h = c(i, j1) - v[j1] - dmin;
                for (std::size_t k = up; k < n; ++k) {
                    const std::size_t j = collist[k];
                    const double v2 = c(i, j) - v[j] - h;
                    if (v2 < d[j]) {
                        pred[j] = i;
                        if (v2 == dmin) {
                            if (colsol[j] == kNone) {
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

        for (std::size_t k = 0; k < last; ++k) {
            const std::size_t j1 = collist[k];
            v[j1] += d[j1] - dmin;
        }
        for (;;) {
            const std::size_t i = pred[endofpath];
            colsol[endofpath] = i;
            const std::size_t j1 = endofpath;
            endofpath = rowsol[i];
            rowsol[i] = j1;
            if (i == freerow) break;
        }
    }

    canonicalize_ties(cost, n, v, rowsol, colsol);

    out.assignment = rowsol;
    out.pair_cost.resize(n);
    out.row_potential.resize(n);
    out.column_potential = v;
    for (std::size_t i = 0; i < n; ++i) {
        if (rowsol[i] == kNone) throw Error("solve_assignment: internal error, unmatched row");
        out.pair_cost[i] = c(i, rowsol[i]);
        out.row_potential[i] = out.pair_cost[i] - v[rowsol[i]];
        out.total_cost += out.pair_cost[i];
    }
    return out;
}

double sliced_wasserstein(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                          std::span<const Point6> directions) {
    const std::size_t n = mu.size(), m = nu.size();
    std::vector<double> a(n), b(m);
    double acc = 0.0;
    for (const Point6& dir : directions) {
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            for (int k = 0; k < 6; ++k) s += dir[k] * mu.points[i][k];
            a[i] = s;
        }
        for (std::size_t j = 0; j < m; ++j) {
            double s = 0.0;
            for (int k = 0; k < 6; ++k) s += dir[k] * nu.points[j][k];
            b[j] = s;
        }
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        // Monotone rearrangement over the common refinement of both quantile grids.
        double cost = 0.0;
        std::size_t i = 0, j = 0;
        double used_a = 0.0, used_b = 0.0;  // mass consumed from a[i] and b[j]
        const double wa = 1.0 / static_cast<double>(n), wb = 1.0 / static_cast<double>(m);
        while (i < n && j < m) {
            const double take = std::min(wa - used_a, wb - used_b);
            cost += take * std::pow(std::abs(a[i] - b[j]), p);
            used_a += take;
            used_b += take;
            if (wa - used_a <= 1e-15 * wa) {
                ++i;
                used_a = 0.0;
            }
            if (wb - used_b <= 1e-15 * wb) {
                ++j;
                used_b = 0.0;
            }
        }
        acc += cost;
    }
    return std::pow(acc / static_cast<double>(directions.size()), 1.0 / p);
}

WassersteinResult wasserstein_p(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, double p,
                                WassersteinMode mode, const WassersteinOptions& options) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw DomainError("wasserstein_p: p must be a finite value >= 1");
    if (mu.size() == 0 || nu.size() == 0) throw DomainError("wasserstein_p: empty measure");
    if (mode == WassersteinMode::sliced) {
        if (options.projections == 0) throw DomainError("wasserstein_p: need at least one projection");
        RandomStream rng(StreamKey{options.seed, 0, StreamPurpose::projections});
        std::vector<Point6> dirs(options.projections);
        for (Point6& d : dirs) {
            double s = 0.0;
            for (double& x : d) {
                x = rng.normal();
                s += x * x;
            }
            s = std::sqrt(s);
            for (double& x : d) x /= s;
        }
        return {sliced_wasserstein(mu, nu, p, dirs), true};
    }
    const std::size_t n = mu.size();
    if (nu.size() != n) {
        std::ostringstream msg;
        msg << "wasserstein_p: exact mode needs equal point counts, got " << n << " and " << nu.size();
        throw DomainError(msg.str());
    }
    if (n > options.exact_max_n) {
        std::ostringstream msg;
        msg << "wasserstein_p: n = " << n << " exceeds the exact-solver limit " << options.exact_max_n
            << "; use sliced mode";
        throw DomainError(msg.str());
    }
    std::vector<double> cost(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) cost[i * n + j] = ground_cost(mu.points[i], nu.points[j], p);
    }
    const Matching m = solve_assignment(cost, n);
    const double mean = std::max(0.0, m.total_cost / static_cast<double>(n));
    return {std::pow(mean, 1.0 / p), false};
}

std::size_t hopcroft_karp(std::size_t n_left, std::size_t n_right, const std::vector<std::vector<std::uint32_t>>& adj) {
    std::vector<std::size_t> match_l(n_left, kNone), match_r(n_right, kNone), dist(n_left);
    std::size_t matched = 0;

    auto bfs = [&] {
        std::queue<std::size_t> queue;
        bool reachable_free = false;
        for (std::size_t u = 0; u < n_left; ++u) {
            if (match_l[u] == kNone) {
                dist[u] = 0;
                queue.push(u);
            } else {
                dist[u] = kNone;
            }
        }
        while (!queue.empty()) {
            const std::size_t u = queue.front();
            queue.pop();
            for (std::uint32_t v : adj[u]) {
                const std::size_t w = match_r[v];
                if (w == kNone) {
                    reachable_free = true;
                } else if (dist[w] == kNone) {
                    dist[w] = dist[u] + 1;
                    queue.push(w);
                }
            }
        }
        return reachable_free;
    };

    // Iterative DFS along the BFS layering; edge_pos[u] is the edge being tried.
    std::vector<std::size_t> edge_pos(n_left);
    auto dfs = [&](std::size_t root) {
        std::vector<std::size_t> stack{root};
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            if (edge_pos[u] == adj[u].size()) {
                dist[u] = kNone;
                stack.pop_back();
                if (!stack.empty()) ++edge_pos[stack.back()];
                continue;
            }
            const std::uint32_t v = adj[u][edge_pos[u]];
            const std::size_t w = match_r[v];
            if (w == kNone) {
                for (const std::size_t x : stack) {
                    const std::uint32_t y = adj[x][edge_pos[x]];
                    match_r[y] = x;
                    match_l[x] = y;
                }
                return true;
            }
            if (dist[w] != kNone && dist[w] == dist[u] + 1) {
                stack.push_back(w);
            } else {
                ++edge_pos[u];
            }
        }
        return false;
    };

    while (bfs()) {
        std::fill(edge_pos.begin(), edge_pos.end(), 0);
        for (std::size_t u = 0; u < n_left; ++u) {
            if (match_l[u] == kNone && dfs(u)) ++matched;
        }
    }
    return matched;
}

double wasserstein_inf(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu) {
    const std::size_t n = mu.size();
    if (nu.size() != n) throw DomainError("wasserstein_inf: unequal point counts");
    if (n == 0) throw DomainError("wasserstein_inf: empty measure");
    std::vector<double> dist(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) dist[i * n + j] = distance6(mu.points[i], nu.points[j]);
    }
    // Every row and column must be matched, so tau is at least the largest
    // row/column minimum.
    double lower = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row_min = kInf, col_min = kInf;
        for (std::size_t j = 0; j < n; ++j) {
            row_min = std::min(row_min, dist[i * n + j]);
            col_min = std::min(col_min, dist[j * n + i]);
        }
        lower = std::max({lower, row_min, col_min});
    }
    std::vector<double> candidates;
    candidates.reserve(dist.size());
    for (double d : dist) {
        if (d >= lower) candidates.push_back(d);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::vector<std::vector<std::uint32_t>> adj(n);
    auto feasible = [&](double tau) {
        for (std::size_t i = 0; i < n; ++i) {
            adj[i].clear();
            for (std::size_t j = 0; j < n; ++j) {
                if (dist[i * n + j] <= tau) adj[i].push_back(static_cast<std::uint32_t>(j));
            }
        }
        return hopcroft_karp(n, n, adj) == n;
    };
    std::size_t lo = 0, hi = candidates.size() - 1;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (feasible(candidates[mid])) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return candidates[lo];
}

double position_deviation(const PhaseState& a, const PhaseState& b) {
    if (a.size() != b.size()) throw DomainError("deviation: particle counts differ");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, max_norm(a.q[i] - b.q[i]));
    return m;
}

double momentum_deviation(const PhaseState& a, const PhaseState& b) {
    if (a.size() != b.size()) throw DomainError("deviation: particle counts differ");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, max_norm(a.p[i] - b.p[i]));
    return m;
}

double delta_metric(const PhaseState& psi, const PhaseState& phi, std::size_t n_for_weight) {
    if (psi.size() != phi.size()) throw DomainError("delta_metric: particle counts differ");
    if (n_for_weight < 4) throw DomainError("delta_metric: n_for_weight must be >= 4");
    const double weight = std::sqrt(std::log(static_cast<double>(n_for_weight)));
    return weight * position_deviation(psi, phi) + momentum_deviation(psi, phi);
}

double matched_sup_distance(const PhaseState& a, const PhaseState& b) {
    if (a.size() != b.size()) throw DomainError("matched distance: particle counts differ");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, distance6(a.point(i), b.point(i)));
    return m;
}

MatchedBound matched_bound_check(const PhaseState& psi, const PhaseState& phi, double p,
                                 const WassersteinOptions& options) {
    MatchedBound out;
    out.bound = matched_sup_distance(psi, phi);
    out.w = wasserstein_p(EmpiricalMeasure::from_state(psi), EmpiricalMeasure::from_state(phi), p,
                          WassersteinMode::exact, options)
                .value;
    out.holds = out.w <= out.bound + 1e-9;
    return out;
}

}  // namespace vplab
