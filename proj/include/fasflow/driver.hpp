#ifndef FASFLOW_DRIVER_HPP
#define FASFLOW_DRIVER_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fasflow/fas.hpp"

namespace fasflow {

enum class TimeUnit { Seconds, Pvi };

struct TimeConfig
{
    double dt0 = 0.0;
    double nu = 2.0; // geometric ramp factor, > 1
    double t_final = 0.0;
    TimeUnit unit = TimeUnit::Seconds;
    int max_steps = 1000;
};

enum class SolverKind { Fas, Newton };

struct SolverConfig
{
    SolverKind kind = SolverKind::Fas;
    HierarchyConfig hierarchy;
    CycleConfig cycle;
    int max_retries = 3; // dt halvings after a nonconverged step
    bool verbose = false;
};

struct SimCase
{
    Mesh mesh;
    WellSet wells;
    FluidModel fluid;
    TimeConfig time;
};

/// One row per attempted step, failures included.
struct StepReport
{
    int step = 0;
    double dt = 0.0;
    double cfl = 0.0;
    int nonlinear_iter = 0;
    int linear_iter = 0;
    double step_time = 0.0;
    bool converged = false;

    // post-step audits (not part of the CSV)
    double well_balance_error = 0.0;  // |sum of perforation fluxes| / injection
    double max_divergence = 0.0;      // max |conservation row| / injection
    double max_sat_violation = 0.0;   // distance of s outside [0,1]
};

struct SimulationResult
{
    std::vector<StepReport> reports;
    Vec state;
    bool completed = false;
    std::string message;
    double total_solve_time = 0.0;
    std::vector<int> level_sizes;
};

/// Advances the case with the geometric dt ramp; each step starts from the
/// previously converged state, and a nonconverged step is retried with dt
/// halved (up to max_retries). Requires at least one BHP well as pressure
/// datum.
SimulationResult run_simulation(const SimCase& sim_case, const SolverConfig& config);

/// Layered lognormal permeability: a smoothed Gaussian field per layer,
/// rescaled in log space so the layer min/max match [k_min, k_max] exactly.
struct LayerSpec
{
    int z0 = 0; // cell layers z0 <= z < z1
    int z1 = 0;
    double k_min = 0.0;
    double k_max = 0.0;
};

struct LognormalSpec
{
    std::vector<LayerSpec> layers;
    int smoothing = 3;
    std::uint64_t seed = 0;
};

std::vector<Vec3> generate_lognormal_field(int nx, int ny, int nz,
                                           const LognormalSpec& spec);

/// steps.csv with the header
/// step,dt,CFL,nonlinear_iter,linear_iter,step_time,converged
void write_step_csv(const std::vector<StepReport>& reports, std::ostream& out);

/// Legacy VTK with pressure and saturation cell fields (structured points
/// for Cartesian meshes, vertex cloud otherwise).
void write_vtk(const Mesh& mesh, const Vec& pressure, const Vec& saturation,
               std::ostream& out);

/// Writes steps.csv, fields.vtk and run_meta.json into `dir`.
void write_outputs(const SimCase& sim_case, const SolverConfig& config,
                   const SimulationResult& result, const std::string& dir);

/// JSON case/solver configuration (schema documented in the README).
SimCase load_case(const std::string& path);
SolverConfig load_solver_config(const std::string& path);

/// Initial state: s = 0, pressures at the BHP datum, zero fluxes.
Vec initial_state(const SimCase& sim_case);

double total_injection_rate(const WellSet& wells);

} // namespace fasflow

#endif
