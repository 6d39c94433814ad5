// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the isptune project.

#pragma once

#include "isptune/params.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace isptune {

/// Point of the normalized search cube [0,1]^d.
using TuningVector = std::vector<double>;

/// Counting wrapper around a minimization target. Evaluation order is the
/// search path, so a deterministic function gives a deterministic run.
class Objective {
public:
    using Function = std::function<double(std::span<const double>)>;

    explicit Objective(Function f) : f_(std::move(f)) {}

    double operator()(std::span<const double> x) {
        ++evals_;
        return f_(x);
    }
    long evals() const noexcept { return evals_; }

private:
    Function f_;
    long evals_ = 0;
};

enum class LocalMethod { NelderMead, Subplex };

struct AbcConfig {
    int population = 40;  ///< number of food sources (SN)
    int limit = 0;        ///< scout trigger; 0 means SN * d
    long max_evals = 20000;
};

struct LocalConfig {
    LocalMethod method = LocalMethod::Subplex;
    double init_step = 0.1;
    /// Per-coordinate lower bound on the initial step magnitude; empty means
    /// init_step everywhere. Used to step across integer plateaus.
    std::vector<double> min_step;
    double x_tol = 1e-4;
    double f_tol = 1e-8;
    long max_evals = 4000;
    int subspace_min = 2;
    int subspace_max = 5;
};

struct OptimConfig {
    AbcConfig abc;
    LocalConfig local;
    /// Total evaluation budget of two_stage; split between the stages by stage_split.
    long total_evals = 4000;
    double stage_split = 0.6;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TracePoint {
    long eval = 0;
    double best_f = 0.0;
};

struct OptimResult {
    TuningVector best;
    double best_f = 0.0;
    long evals_used = 0;
    /// Best-so-far after each improvement (plus the final evaluation count).
    std::vector<TracePoint> trace;
};

/// Artificial bee colony on [0,1]^d: employed, onlooker (roulette on
/// 1/(1+f)) and scout phases; stops exactly at cfg.abc.max_evals.
OptimResult abc_optimize(Objective& f, int d, const OptimConfig& cfg, std::uint64_t seed);

/// Bounded Nelder-Mead from x0 (coefficients 1, 2, 0.5, 0.5; projection onto
/// the cube). Stops when both the simplex extent <= x_tol and the f spread
/// <= f_tol, or when cfg.local.max_evals is reached.
OptimResult nelder_mead(Objective& f, const TuningVector& x0, const OptimConfig& cfg);

/// Subspace-searching simplex: repeatedly partitions the coordinates into
/// subspaces of size [subspace_min, subspace_max] ordered by the last
/// progress vector and runs Nelder-Mead inside each.
OptimResult subplex(Objective& f, const TuningVector& x0, const OptimConfig& cfg);

/// Same as subplex but reuses an already known f(x0), saving one evaluation.
OptimResult subplex(Objective& f, const TuningVector& x0, double f0, const OptimConfig& cfg);

/// ABC with stage_split * total_evals, then the local method from the ABC
/// incumbent with the remainder.
OptimResult two_stage(Objective& f, int d, const OptimConfig& cfg);

/// Local stage only, started from a given point (the previous gain's tuning).
OptimResult warm_start_local(Objective& f, const TuningVector& x_init, const OptimConfig& cfg);

/// Runs the configured local method (Nelder-Mead or Subplex).
OptimResult local_optimize(Objective& f, const TuningVector& x0, const OptimConfig& cfg);

/// "eval_index,best_f" rows.
std::string trace_to_csv(const OptimResult& r);

} // namespace isptune
