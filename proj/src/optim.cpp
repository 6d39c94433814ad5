// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#include "isptune/optim.hpp"

#include "isptune/error.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <random>

namespace isptune {

void OptimConfig::validate() const {
    require(abc.population >= 4, "ABC population must be at least 4");
    require(abc.limit >= 0, "ABC limit must be non-negative");
    require(abc.max_evals > 0 && local.max_evals > 0 && total_evals > 0, "evaluation budgets must be positive");
    require(local.init_step > 0.0 && local.init_step <= 1.0, "local init_step must lie in (0,1]");
    require(local.x_tol > 0.0 && local.f_tol >= 0.0, "local tolerances must be positive");
    require(local.subspace_min >= 2 && local.subspace_min <= local.subspace_max,
            "subspace bounds must satisfy 2 <= subspace_min <= subspace_max");
    require(stage_split > 0.0 && stage_split < 1.0, "stage_split must lie in (0,1)");
    require(std::ranges::all_of(local.min_step, [](double v) { return v >= 0.0 && v <= 1.0; }),
            "local min_step entries must lie in [0,1]");
}

namespace {

// Budget-limited evaluator that keeps the incumbent and its trace.
class Tracker {
public:
    Tracker(Objective& f, long budget) : f_(f), budget_(budget) {}

    bool exhausted() const noexcept { return used_ >= budget_; }
    long used() const noexcept { return used_; }

    double eval(std::span<const double> x) {
        assert(!exhausted());
        assert(std::ranges::all_of(x, [](double v) { return v >= 0.0 && v <= 1.0; }));
        ++used_;
        double v = f_(x);
        if (std::isnan(v)) v = std::numeric_limits<double>::infinity();
        if (best_.empty() || v < best_f_) {
            best_.assign(x.begin(), x.end());
            best_f_ = v;
            trace_.push_back({used_, v});
        }
        return v;
    }

    /// Registers a point whose value is already known (costs no evaluation).
    void seed(std::span<const double> x, double v) {
        if (best_.empty() || v < best_f_) {
            best_.assign(x.begin(), x.end());
            best_f_ = v;
            trace_.push_back({used_, v});
        }
    }

    OptimResult result() const {
        OptimResult r;
        r.best = best_;
        r.best_f = best_f_;
        r.evals_used = used_;
        r.trace = trace_;
        if (r.trace.empty() || r.trace.back().eval != used_) r.trace.push_back({used_, best_f_});
        return r;
    }

private:
    Objective& f_;
    long budget_;
    long used_ = 0;
    TuningVector best_;
    double best_f_ = std::numeric_limits<double>::infinity();
    std::vector<TracePoint> trace_;
};

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

std::vector<double> initial_steps(const OptimConfig& cfg, std::size_t n) {
    require(cfg.local.min_step.empty() || cfg.local.min_step.size() == n, "local min_step does not match the dimension");
    std::vector<double> steps(n, cfg.local.init_step);
    for (std::size_t i = 0; i < cfg.local.min_step.size(); ++i) steps[i] = std::max(steps[i], cfg.local.min_step[i]);
    return steps;
}

// =============================================================================
// Nelder-Mead on a coordinate subset
// =============================================================================

struct SimplexStop {
    double x_tol = 0.0;      ///< absolute extent tolerance (0 disables)
    double f_tol = 0.0;
    double size_ratio = 0.0; ///< stop when size <= ratio * initial size (0 disables)
};

constexpr double kReflect = 1.0;
constexpr double kExpand = 2.0;
constexpr double kContract = 0.5;
constexpr double kShrink = 0.5;

// Minimizes over the coordinates `dims` of `x`, others frozen. On return x and
// fx hold the best vertex found. `steps` are signed initial edge lengths.
void simplex_search(Tracker& t, TuningVector& x, double& fx, std::span<const int> dims, std::span<const double> steps,
                    const SimplexStop& stop) {
    const std::size_t n = dims.size();
    std::vector<std::vector<double>> v(n + 1, std::vector<double>(n));
    std::vector<double> fv(n + 1);
    TuningVector probe = x;

    auto evaluate = [&](const std::vector<double>& sub) {
        for (std::size_t j = 0; j < n; ++j) probe[static_cast<std::size_t>(dims[j])] = sub[j];
        return t.eval(probe);
    };

    for (std::size_t j = 0; j < n; ++j) v[0][j] = x[static_cast<std::size_t>(dims[j])];
    fv[0] = fx;
    for (std::size_t i = 1; i <= n; ++i) {
        if (t.exhausted()) return;
        v[i] = v[0];
        const std::size_t j = i - 1;
        double s = steps[j];
        if (v[0][j] + s > 1.0 || v[0][j] + s < 0.0) s = -s;
        v[i][j] = clamp01(v[0][j] + s);
        fv[i] = evaluate(v[i]);
    }

    auto size_of = [&](std::size_t best) {
        double acc = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < n; ++j) acc += std::abs(v[i][j] - v[best][j]);
        }
        return acc;
    };

    std::vector<std::size_t> order(n + 1);
    std::iota(order.begin(), order.end(), 0);
    auto sort_order = [&] {
        std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    };
    sort_order();
    const double initial_size = size_of(order[0]);

    std::vector<double> centroid(n), xr(n), xe(n), xc(n);
    while (!t.exhausted()) {
        sort_order();
        const std::size_t best = order[0];
        const std::size_t worst = order[n];
        const std::size_t second = order[n - 1];

        if (stop.size_ratio > 0.0 && size_of(best) <= stop.size_ratio * initial_size) break;
        if (stop.x_tol > 0.0) {
            double extent = 0.0;
            for (std::size_t i = 0; i <= n; ++i)
                for (std::size_t j = 0; j < n; ++j) extent = std::max(extent, std::abs(v[i][j] - v[best][j]));
            if (extent <= stop.x_tol && fv[worst] - fv[best] <= stop.f_tol) break;
        }

        std::ranges::fill(centroid, 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += v[i][j];
        }
        for (double& c : centroid) c /= static_cast<double>(n);

        for (std::size_t j = 0; j < n; ++j) xr[j] = clamp01(centroid[j] + kReflect * (centroid[j] - v[worst][j]));
        const double fr = evaluate(xr);

        if (fr < fv[best]) {
            if (t.exhausted()) {
                v[worst] = xr;
                fv[worst] = fr;
                break;
            }
            for (std::size_t j = 0; j < n; ++j) xe[j] = clamp01(centroid[j] + kExpand * (xr[j] - centroid[j]));
            const double fe = evaluate(xe);
            if (fe < fr) {
                v[worst] = xe;
                fv[worst] = fe;
            } else {
                v[worst] = xr;
                fv[worst] = fr;
            }
            continue;
        }
        if (fr < fv[second]) {
            v[worst] = xr;
            fv[worst] = fr;
            continue;
        }
        if (t.exhausted()) break;

        bool accepted = false;
        if (fr < fv[worst]) {
            for (std::size_t j = 0; j < n; ++j) xc[j] = centroid[j] + kContract * (xr[j] - centroid[j]);
            const double fc = evaluate(xc);
            if (fc <= fr) {
                v[worst] = xc;
                fv[worst] = fc;
                accepted = true;
            }
        } else {
            for (std::size_t j = 0; j < n; ++j) xc[j] = centroid[j] + kContract * (v[worst][j] - centroid[j]);
            const double fc = evaluate(xc);
            if (fc < fv[worst]) {
                v[worst] = xc;
                fv[worst] = fc;
                accepted = true;
            }
        }
        if (accepted) continue;

        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            if (t.exhausted()) break;
            for (std::size_t j = 0; j < n; ++j) v[i][j] = v[best][j] + kShrink * (v[i][j] - v[best][j]);
            fv[i] = evaluate(v[i]);
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[best]) best = i;
    if (fv[best] < fx) {
        for (std::size_t j = 0; j < n; ++j) x[static_cast<std::size_t>(dims[j])] = v[best][j];
        fx = fv[best];
    }
}

void check_start(const TuningVector& x0) {
    require(!x0.empty(), "start point must have at least one dimension");
    require(std::ranges::all_of(x0, [](double v) { return v >= 0.0 && v <= 1.0; }), "start point outside [0,1]^d");
}

OptimResult run_nelder_mead(Objective& f, const TuningVector& x0, std::optional<double> f0, const OptimConfig& cfg,
                            long budget) {
    check_start(x0);
    Tracker t(f, budget);
    TuningVector x = x0;
    double fx;
    if (f0) {
        fx = *f0;
        t.seed(x, fx);
    } else {
        fx = t.eval(x);
    }
    std::vector<int> dims(x.size());
    std::iota(dims.begin(), dims.end(), 0);
    const std::vector<double> steps = initial_steps(cfg, x.size());
    simplex_search(t, x, fx, dims, steps, SimplexStop{cfg.local.x_tol, cfg.local.f_tol, 0.0});
    return t.result();
}

// =============================================================================
// Subplex
// =============================================================================

constexpr double kPsi = 0.25;   // simplex reduction per subspace pass
constexpr double kOmega = 0.1;  // step-scale bounds [omega, 1/omega]

// Splits coordinates (already sorted by decreasing |dx|) into subspace sizes.
std::vector<int> partition_subspaces(std::span<const double> sorted_abs_dx, int nsmin, int nsmax) {
    const int n = static_cast<int>(sorted_abs_dx.size());
    std::vector<int> sizes;
    int used = 0;
    double left_sum = std::accumulate(sorted_abs_dx.begin(), sorted_abs_dx.end(), 0.0);
    while (used < n) {
        const int nleft = n - used;
        if (nleft <= nsmax && nleft < 2 * nsmin) {
            sizes.push_back(nleft);
            break;
        }
        double as1 = 0.0;
        for (int i = 0; i < nsmin - 1; ++i) as1 += sorted_abs_dx[static_cast<std::size_t>(used + i)];
        double gap_max = -1.0;
        int best_ns = std::min(nsmin, nleft);
        double best_as1 = 0.0;
        const int limit = std::min(nsmax, nleft);
        for (int ns1 = nsmin; ns1 <= limit; ++ns1) {
            as1 += sorted_abs_dx[static_cast<std::size_t>(used + ns1 - 1)];
            const int ns2 = nleft - ns1;
            if (ns2 > 0) {
                // The remainder must still be splittable into pieces of at least nsmin.
                if (ns2 >= ((ns2 - 1) / nsmax + 1) * nsmin) {
                    const double gap = as1 / ns1 - (left_sum - as1) / ns2;
                    if (gap > gap_max) {
                        gap_max = gap;
                        best_ns = ns1;
                        best_as1 = as1;
                    }
                }
            } else if (as1 / ns1 > gap_max) {
                best_ns = ns1;
                best_as1 = as1;
                gap_max = as1 / ns1;
            }
        }
        sizes.push_back(best_ns);
        used += best_ns;
        left_sum -= best_as1;
    }
    return sizes;
}

OptimResult run_subplex(Objective& f, const TuningVector& x0, std::optional<double> f0, const OptimConfig& cfg,
                        long budget) {
    check_start(x0);
    const int n = static_cast<int>(x0.size());
    const int nsmin = std::min(cfg.local.subspace_min, n);
    const int nsmax = std::min(cfg.local.subspace_max, n);

    Tracker t(f, budget);
    TuningVector x = x0;
    double fx;
    if (f0) {
        fx = *f0;
        t.seed(x, fx);
    } else {
        fx = t.eval(x);
    }

    std::vector<double> step = initial_steps(cfg, x0.size());
    for (int i = 0; i < n; ++i)
        if (x[static_cast<std::size_t>(i)] + step[static_cast<std::size_t>(i)] > 1.0) step[static_cast<std::size_t>(i)] = -step[static_cast<std::size_t>(i)];
    std::vector<double> dx = step;

    while (!t.exhausted()) {
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 0);
        std::ranges::stable_sort(perm, [&](int a, int b) {
            return std::abs(dx[static_cast<std::size_t>(a)]) > std::abs(dx[static_cast<std::size_t>(b)]);
        });
        std::vector<double> sorted_abs(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) sorted_abs[static_cast<std::size_t>(i)] = std::abs(dx[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])]);
        const std::vector<int> sizes =
            n <= nsmax ? std::vector<int>{n} : partition_subspaces(sorted_abs, nsmin, nsmax);

        const TuningVector x_prev = x;
        int offset = 0;
        for (int ns : sizes) {
            if (t.exhausted()) break;
            const std::span<const int> dims(perm.data() + offset, static_cast<std::size_t>(ns));
            std::vector<double> sub_steps(static_cast<std::size_t>(ns));
            for (int j = 0; j < ns; ++j) sub_steps[static_cast<std::size_t>(j)] = step[static_cast<std::size_t>(dims[static_cast<std::size_t>(j)])];
            simplex_search(t, x, fx, dims, sub_steps, SimplexStop{0.0, 0.0, kPsi});
            offset += ns;
        }

        double dx_l1 = 0.0;
        double step_l1 = 0.0;
        double stop_measure = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            dx[k] = x[k] - x_prev[k];
            dx_l1 += std::abs(dx[k]);
            step_l1 += std::abs(step[k]);
            stop_measure = std::max(stop_measure, std::max(std::abs(dx[k]), kPsi * std::abs(step[k])) /
                                                      std::max(std::abs(x[k]), 1.0));
        }
        if (stop_measure <= cfg.local.x_tol) break;

        double factor;
        if (dx_l1 == 0.0) {
            factor = kPsi;
        } else if (sizes.size() > 1) {
            factor = std::clamp(dx_l1 / step_l1, kOmega, 1.0 / kOmega);
        } else {
            factor = kPsi;
        }
        for (int i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            double s = std::min(std::abs(step[k]) * factor, 1.0);
            if (dx[k] == 0.0) {
                s = step[k] > 0 ? -s : s;
            } else {
                s = std::copysign(s, dx[k]);
            }
            step[k] = s;
        }
    }
    return t.result();
}

OptimResult run_local(Objective& f, const TuningVector& x0, std::optional<double> f0, const OptimConfig& cfg,
                      long budget) {
    return cfg.local.method == LocalMethod::NelderMead ? run_nelder_mead(f, x0, f0, cfg, budget)
                                                       : run_subplex(f, x0, f0, cfg, budget);
}

} // namespace

// =============================================================================
// ABC
// =============================================================================

OptimResult abc_optimize(Objective& f, int d, const OptimConfig& cfg, std::uint64_t seed) {
    require(d >= 1, "abc_optimize: dimension must be >= 1");
    cfg.validate();
    const int sn = cfg.abc.population;
    const long budget = cfg.abc.max_evals;
    if (budget < sn) {
        fail(ErrorCode::BudgetTooSmall, "ABC budget smaller than the population");
    }
    const int limit = cfg.abc.limit > 0 ? cfg.abc.limit : sn * d;

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> phi_dist(-1.0, 1.0);
    std::uniform_int_distribution<int> pick_dim(0, d - 1);
    std::uniform_int_distribution<int> pick_other(0, sn - 2);

    Tracker t(f, budget);
    std::vector<TuningVector> food(static_cast<std::size_t>(sn), TuningVector(static_cast<std::size_t>(d)));
    std::vector<double> cost(static_cast<std::size_t>(sn));
    std::vector<int> trials(static_cast<std::size_t>(sn), 0);

    auto random_source = [&](TuningVector& x) {
        for (double& v : x) v = unit(rng);
    };
    auto quality = [](double c) { return c >= 0.0 ? 1.0 / (1.0 + c) : 1.0 + std::abs(c); };

    for (int i = 0; i < sn; ++i) {
        random_source(food[static_cast<std::size_t>(i)]);
        cost[static_cast<std::size_t>(i)] = t.eval(food[static_cast<std::size_t>(i)]);
    }

    TuningVector candidate(static_cast<std::size_t>(d));
    auto try_neighbour = [&](int i) {
        const auto ui = static_cast<std::size_t>(i);
        int k = pick_other(rng);
        if (k >= i) ++k;
        const auto j = static_cast<std::size_t>(pick_dim(rng));
        const double phi = phi_dist(rng);
        candidate = food[ui];
        candidate[j] = clamp01(food[ui][j] + phi * (food[ui][j] - food[static_cast<std::size_t>(k)][j]));
        const double c = t.eval(candidate);
        if (c < cost[ui]) {
            food[ui] = candidate;
            cost[ui] = c;
            trials[ui] = 0;
        } else {
            ++trials[ui];
        }
    };

    while (!t.exhausted()) {
        // Employed bees.
        for (int i = 0; i < sn && !t.exhausted(); ++i) try_neighbour(i);

        // Onlooker bees: roulette wheel on 1/(1+f).
        std::vector<double> q(static_cast<std::size_t>(sn));
        for (int i = 0; i < sn; ++i) q[static_cast<std::size_t>(i)] = quality(cost[static_cast<std::size_t>(i)]);
        std::partial_sum(q.begin(), q.end(), q.begin());
        for (int m = 0; m < sn && !t.exhausted(); ++m) {
            const double r = unit(rng) * q.back();
            const auto it = std::ranges::upper_bound(q, r);
            const int i = std::min(static_cast<int>(it - q.begin()), sn - 1);
            try_neighbour(i);
        }

        // Scout: abandon the most stale source once it exceeds the limit.
        const auto stale = std::ranges::max_element(trials);
        if (*stale > limit && !t.exhausted()) {
            const auto i = static_cast<std::size_t>(stale - trials.begin());
            random_source(food[i]);
            cost[i] = t.eval(food[i]);
            trials[i] = 0;
        }
    }
    return t.result();
}

// =============================================================================
// Local methods and combinations
// =============================================================================

OptimResult nelder_mead(Objective& f, const TuningVector& x0, const OptimConfig& cfg) {
    cfg.validate();
    return run_nelder_mead(f, x0, std::nullopt, cfg, cfg.local.max_evals);
}

OptimResult subplex(Objective& f, const TuningVector& x0, const OptimConfig& cfg) {
    cfg.validate();
    return run_subplex(f, x0, std::nullopt, cfg, cfg.local.max_evals);
}

OptimResult subplex(Objective& f, const TuningVector& x0, double f0, const OptimConfig& cfg) {
    cfg.validate();
    return run_subplex(f, x0, f0, cfg, cfg.local.max_evals);
}

OptimResult local_optimize(Objective& f, const TuningVector& x0, const OptimConfig& cfg) {
    cfg.validate();
    return run_local(f, x0, std::nullopt, cfg, cfg.local.max_evals);
}

OptimResult warm_start_local(Objective& f, const TuningVector& x_init, const OptimConfig& cfg) {
    return local_optimize(f, x_init, cfg);
}

OptimResult two_stage(Objective& f, int d, const OptimConfig& cfg) {
    cfg.validate();
    const long global_budget = static_cast<long>(std::floor(cfg.stage_split * static_cast<double>(cfg.total_evals)));
    if (global_budget < cfg.abc.population) {
        fail(ErrorCode::BudgetTooSmall, "two_stage: global share of the budget is smaller than the population");
    }
    OptimConfig global_cfg = cfg;
    global_cfg.abc.max_evals = global_budget;
    OptimResult global = abc_optimize(f, d, global_cfg, cfg.seed);

    const long local_budget = cfg.total_evals - global.evals_used;
    if (local_budget <= 0) {
        return global;
    }
    OptimResult local = run_local(f, global.best, global.best_f, cfg, local_budget);

    OptimResult out;
    out.best = local.best_f < global.best_f ? local.best : global.best;
    out.best_f = std::min(local.best_f, global.best_f);
    out.evals_used = global.evals_used + local.evals_used;
    out.trace = global.trace;
    for (const auto& p : local.trace) {
        const TracePoint shifted{p.eval + global.evals_used, p.best_f};
        if (shifted.best_f < out.trace.back().best_f || &p == &local.trace.back()) out.trace.push_back(shifted);
    }
    return out;
}

std::string trace_to_csv(const OptimResult& r) {
    std::string out = "eval_index,best_f\n";
    char buf[64];
    for (const auto& p : r.trace) {
        std::snprintf(buf, sizeof buf, "%ld,%.17g\n", p.eval, p.best_f);
        out += buf;
    }
    return out;
}

} // namespace isptune
