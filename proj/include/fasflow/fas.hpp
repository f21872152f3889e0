#ifndef FASFLOW_FAS_HPP
#define FASFLOW_FAS_HPP

#include <functional>
#include <string>

#include "fasflow/hierarchy.hpp"
#include "fasflow/smoother.hpp"

namespace fasflow {

struct CycleConfig
{
    int pre_smooth = 1;      // Newton steps per non-coarsest smoothing call
    int post_smooth = 1;
    int coarsest_iters = 10; // Newton iteration cap on the coarsest level
    double theta = 0.5;      // backtracking step shrink factor
    int max_backtrack = 4;
    double rtol = 1e-6;      // outer: ||r|| <= rtol * ||r0||
    double atol = 1e-8;      // outer: scaled absolute fallback
    int max_outer = 60;
    SmootherOptions smoother;
};

struct BacktrackResult
{
    bool accepted = false;
    int halvings = 0;
    double norm = 0.0;
};

/// Monotone backtracking: accepts x + theta^j dx for the smallest j with
/// norm_of(candidate) <= norm_of(x); leaves x unchanged when every trial
/// increases the norm. `postprocess` (may be null) is applied to each
/// candidate before evaluation (fine-level saturation chopping).
BacktrackResult backtracking(const std::function<double(const Vec&)>& norm_of,
                             Vec& x, const Vec& dx, double theta, int max_halvings,
                             const std::function<void(Vec&)>& postprocess = nullptr);

struct OuterResult
{
    bool converged = false;
    int iterations = 0;        // V-cycles (FAS) or Newton steps (single level)
    int linear_iterations = 0;
    double initial_norm = 0.0;
    double final_norm = 0.0;
    std::string message;
};

/// Nonlinear solver for one time step: repeated FAS V-cycles on the
/// hierarchy, degenerating to plain Newton when the hierarchy has a single
/// level. Fine-level updates chop saturations into [0,1]; coarse updates
/// rely on the constant mobility extension instead.
class FasSolver
{
public:
    FasSolver(Hierarchy& hierarchy, CycleConfig config);

    /// Refresh dt-dependent data before solving a step.
    void set_time_step(double dt, const Vec& s_prev_fine);

    /// Outer iterations from the given initial guess (updated in place).
    OuterResult solve(Vec& x);

    /// One V-cycle at `level` for the level problem r(x) = b. Used by the
    /// outer loop and exposed for testing.
    SmoothResult cycle(int level, Vec& x, const Vec& b);

    const CycleConfig& config() const { return config_; }

private:
    Hierarchy& hierarchy_;
    CycleConfig config_;
    std::vector<ResidualScales> scales_;

    Reduction reduction_for(int level) const
    {
        return level == 0 ? Reduction::Primal : Reduction::Hybrid;
    }
};

} // namespace fasflow

#endif
