#ifndef FASFLOW_ASSEMBLY_HPP
#define FASFLOW_ASSEMBLY_HPP

#include <vector>

#include "fasflow/fluid.hpp"
#include "fasflow/grid.hpp"
#include "fasflow/state.hpp"
#include "fasflow/wells.hpp"

namespace fasflow {

/// Flux connection between cells k and l (k < l on the fine level). The
/// inverse transmissibilities multiply 1/lambda evaluated at the adjacent
/// saturations; pcoef scales the pressure difference and the incidence
/// entries (1 on the fine level, the bundle size on coarse levels).
struct FaceConn
{
    int k = -1;
    int l = -1;
    double inv_trans_k = 0.0;
    double inv_trans_l = 0.0;
    double pcoef = 1.0;
};

/// Well-to-cell connection; inv_wi multiplies 1/lambda(s_cell).
struct PerfConn
{
    int cell = -1;
    int well = -1;
    double inv_wi = 0.0;
    double pcoef = 1.0;
};

struct WellData
{
    WellControl control = WellControl::Bhp;
    double target = 0.0;
};

/// The discrete problem on one level of the hierarchy. The coarse problems
/// produced by Galerkin restriction have exactly this structure, so a single
/// assembler serves every level.
struct LevelProblem
{
    BlockLayout layout;
    std::vector<FaceConn> faces;
    std::vector<PerfConn> perfs;
    std::vector<WellData> wells;
    std::vector<std::vector<int>> well_perfs; // perf indices per well
    std::vector<double> pore_volume;          // phi |tau| per cell
    std::vector<double> cell_volume;
    const FluidModel* fluid = nullptr;

    // Time-step data, refreshed once per time step: the transport row is
    // (pv/dt) s + advection - time_lag, with time_lag the restriction of
    // the fine-level (pv/dt) s^{m-1}.
    double dt = 1.0;
    Vec time_lag;

    void set_fine_time_step(double dt_step, const Vec& s_prev);
    void validate() const;
};

/// Fine-level problem for a mesh/well/fluid triple.
LevelProblem build_fine_problem(const Mesh& mesh, const WellSet& wells,
                                const FluidModel& fluid);

/// Block residual r(x) of the level problem (layout order).
Vec assemble_residual(const LevelProblem& prob, const Vec& x);

/// Analytic block-sparse Jacobian at x; upwind directions frozen at the
/// current flux signs.
SpMat assemble_jacobian(const LevelProblem& prob, const Vec& x);

/// Largest cell CFL number: dt * outflux * max f_w' / pore volume.
double cfl_number(const LevelProblem& prob, const Vec& x, double dt);

/// Per-block residual scales used by the convergence test: flux rows carry
/// pressure units, conservation/rate rows volumetric-rate units, transport
/// rows pore-volume-per-dt units.
struct ResidualScales
{
    double pressure = 1.0;
    double rate = 1.0;
    Vec transport; // per cell: pore volume / dt
};

ResidualScales make_residual_scales(const LevelProblem& prob);

/// Scaled l2 norm of a residual vector.
double scaled_norm(const LevelProblem& prob, const ResidualScales& scales, const Vec& r);

} // namespace fasflow

#endif
