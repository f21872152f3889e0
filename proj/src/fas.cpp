#include "fasflow/fas.hpp"

#include <cmath>
#include <stdexcept>

namespace fasflow {

BacktrackResult backtracking(const std::function<double(const Vec&)>& norm_of,
                             Vec& x, const Vec& dx, double theta, int max_halvings,
                             const std::function<void(Vec&)>& postprocess)
{
    BacktrackResult res;
    const double base = norm_of(x);
    double step = 1.0;
    for (int j = 0; j <= max_halvings; ++j, step *= theta) {
        Vec candidate = x + step * dx;
        if (postprocess) postprocess(candidate);
        const double n = norm_of(candidate);
        if (std::isfinite(n) && n <= base) {
            x = std::move(candidate);
            res.accepted = true;
            res.halvings = j;
            res.norm = n;
            return res;
        }
    }
    res.norm = base; // correction rejected
    return res;
}

FasSolver::FasSolver(Hierarchy& hierarchy, CycleConfig config)
    : hierarchy_(hierarchy), config_(config)
{
    if (config_.theta <= 0.0 || config_.theta >= 1.0)
        throw std::invalid_argument("FasSolver: theta must be in (0,1)");
    scales_.resize(hierarchy_.num_levels());
    for (int l = 0; l < hierarchy_.num_levels(); ++l)
        scales_[l] = make_residual_scales(hierarchy_.problem(l));
}

void FasSolver::set_time_step(double dt, const Vec& s_prev_fine)
{
    hierarchy_.set_time_step(dt, s_prev_fine);
    for (int l = 0; l < hierarchy_.num_levels(); ++l)
        scales_[l] = make_residual_scales(hierarchy_.problem(l));
}

SmoothResult FasSolver::cycle(int level, Vec& x, const Vec& b)
{
    const LevelProblem& prob = hierarchy_.problem(level);
    const bool coarsest = (level == hierarchy_.num_levels() - 1);

    SmoothParams params;
    params.chop_saturations = (level == 0);
    // fine smoothing is damped (chopping alone does not control the flux and
    // pressure overshoot at large dt); coarse Newton takes plain steps and
    // relies on the mobility extension, with the prolonged correction
    // backtracked at the parent level
    params.backtrack = level == 0 ? std::max(config_.max_backtrack, 8) : 0;
    params.theta = config_.theta;

    if (coarsest) {
        params.max_steps = config_.coarsest_iters;
        // the correction only needs a few digits from the coarse problem
        const double entry =
            scaled_norm(prob, scales_[level], assemble_residual(prob, x) - b);
        params.stop_tol = std::max(1e-3 * entry, 0.1 * config_.atol);
        return newton_smooth(prob, x, b, reduction_for(level), config_.smoother, params);
    }

    SmoothResult total;
    params.max_steps = config_.pre_smooth;
    SmoothResult pre = newton_smooth(prob, x, b, reduction_for(level), config_.smoother,
                                     params);
    total.linear_iterations += pre.linear_iterations;
    if (!pre.ok) return pre;

    // tau-corrected coarse problem
    const LevelTransfer& tr = hierarchy_.transfer(level);
    const LevelProblem& coarse = hierarchy_.problem(level + 1);
    Vec xc = tr.project(x);
    Vec bc = assemble_residual(coarse, xc) -
             tr.restrict_residual(assemble_residual(prob, x) - b);

    Vec yc = xc;
    SmoothResult sub = cycle(level + 1, yc, bc);
    total.linear_iterations += sub.linear_iterations;
    if (!sub.ok) return sub;

    const Vec correction = tr.prolong(yc - xc);
    auto norm_of = [&](const Vec& v) {
        return scaled_norm(prob, scales_[level], assemble_residual(prob, v) - b);
    };
    std::function<void(Vec&)> post;
    if (level == 0)
        post = [&prob](Vec& v) { chop_saturations(prob.layout, v); };
    backtracking(norm_of, x, correction, config_.theta, config_.max_backtrack, post);

    params.max_steps = config_.post_smooth;
    SmoothResult posts = newton_smooth(prob, x, b, reduction_for(level),
                                       config_.smoother, params);
    total.linear_iterations += posts.linear_iterations;
    total.ok = posts.ok;
    total.message = posts.message;
    total.scaled_residual = posts.scaled_residual;
    return total;
}

OuterResult FasSolver::solve(Vec& x)
{
    OuterResult out;
    const LevelProblem& fine = hierarchy_.problem(0);
    const Vec zero = Vec::Zero(fine.layout.total());

    auto norm_now = [&]() {
        return scaled_norm(fine, scales_[0], assemble_residual(fine, x));
    };

    out.initial_norm = norm_now();
    out.final_norm = out.initial_norm;
    if (out.initial_norm <= config_.atol) {
        out.converged = true;
        return out;
    }

    const bool single_level = hierarchy_.num_levels() == 1;
    for (int k = 1; k <= config_.max_outer; ++k) {
        SmoothResult it;
        if (single_level) {
            // damped Newton: backtracked line search plus saturation chopping
            SmoothParams params;
            params.max_steps = 1;
            params.chop_saturations = true;
            params.backtrack = std::max(config_.max_backtrack, 8);
            params.theta = config_.theta;
            it = newton_smooth(fine, x, zero, Reduction::Primal, config_.smoother,
                               params);
        } else {
            it = cycle(0, x, zero);
        }
        out.iterations = k;
        out.linear_iterations += it.linear_iterations;
        if (!it.ok) {
            out.message = it.message;
            return out;
        }
        out.final_norm = norm_now();
        if (out.final_norm <= config_.rtol * out.initial_norm ||
            out.final_norm <= config_.atol) {
            out.converged = true;
            return out;
        }
    }
    out.message = "nonlinear iteration cap reached";
    return out;
}

} // namespace fasflow
