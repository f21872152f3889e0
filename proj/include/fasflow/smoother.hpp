#ifndef FASFLOW_SMOOTHER_HPP
#define FASFLOW_SMOOTHER_HPP

#include <string>

#include "fasflow/assembly.hpp"
#include "fasflow/linsolve.hpp"

namespace fasflow {

/// How the Jacobian system of a level is reduced before the linear solve:
/// Primal eliminates the (diagonal) flux blocks and solves for pressures and
/// saturations; Hybrid duplicates fluxes into one-sided copies tied by
/// Lagrange multipliers and solves the (face pressure, saturation) system.
enum class Reduction { Primal, Hybrid };

struct SmootherOptions
{
    LinearOptions linear;
    double alpha_split = 0.5; // perforation weight split for hybridization
};

struct UpdateResult
{
    bool ok = false;
    int linear_iterations = 0;
    double continuity_error = 0.0; // hybrid path: max |dsigma_K - dsigma_L|
    std::string message;
};

/// One Newton update dx solving J(x) dx = -(r(x) - b) through the requested
/// reduction. x is not modified.
UpdateResult newton_update(const LevelProblem& prob, const Vec& x, const Vec& b,
                           Reduction reduction, const SmootherOptions& opts, Vec& dx);

struct SmoothResult
{
    bool ok = false;
    int steps = 0;
    int linear_iterations = 0;
    double scaled_residual = 0.0;
    std::string message;
};

struct SmoothParams
{
    int max_steps = 1;
    double stop_tol = 0.0; // scaled residual early exit; 0 disables
    bool chop_saturations = false;
    int backtrack = 0;     // halvings of the Newton step when the scaled
    double theta = 0.5;    // residual would grow; 0 takes plain updates
};

/// n Newton smoothing steps on r(x) = b. With backtrack > 0 each update is
/// safeguarded by a monotone line search on the scaled residual norm.
/// Saturation chopping clamps s to [0,1] after each update when enabled.
SmoothResult newton_smooth(const LevelProblem& prob, Vec& x, const Vec& b,
                           Reduction reduction, const SmootherOptions& opts,
                           const SmoothParams& params);

/// Clamp the saturation block of a state to [0,1].
void chop_saturations(const BlockLayout& layout, Vec& x);

} // namespace fasflow

#endif
