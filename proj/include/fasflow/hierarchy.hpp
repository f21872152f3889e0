#ifndef FASFLOW_HIERARCHY_HPP
#define FASFLOW_HIERARCHY_HPP

#include <cstdint>
#include <vector>

#include "fasflow/assembly.hpp"
#include "fasflow/partition.hpp"

namespace fasflow {

/// Block intergrid operators between two consecutive levels.
///
/// P interpolates coarse to fine: aggregate indicators for pressures and
/// saturations, identity for well pressures, and signed
/// transmissibility-share distributions over face/perforation bundles for
/// fluxes (a coarse flux dof is the bundle total; interpolation splits it in
/// proportion to the geometric transmissibilities, so the Galerkin coarse
/// transmissibility is the parallel sum of the bundle). R = P^T. The
/// projection Q averages over the aggregate (volume weights for pressure,
/// pore-volume weights for saturation, transmissibility weights for fluxes),
/// evaluated in deviation form around a representative member so that
/// Q P = I holds bitwise: on an interpolated vector every deviation is
/// exactly zero.
struct LevelTransfer
{
    BlockLayout fine;
    BlockLayout coarse;

    std::vector<int> cell_agg;    // fine cell -> coarse cell
    std::vector<int> face_coarse; // fine face -> coarse face, -1 if interior
    std::vector<double> face_sign;
    std::vector<int> perf_coarse; // fine perf -> coarse perf

    std::vector<int> rep_cell; // coarse cell -> representative fine cell
    std::vector<int> rep_face; // coarse face -> representative fine face
    std::vector<int> rep_perf;

    std::vector<double> cell_volume_weight; // per fine cell: |tau| / sum over agg
    std::vector<double> cell_pv_weight;     // per fine cell: phi |tau| / sum
    std::vector<double> face_weight;        // per fine face: transmissibility share
    std::vector<double> perf_weight;        // per fine perf: well-index share

    Vec prolong(const Vec& coarse_x) const;      // P x
    Vec restrict_residual(const Vec& fine_r) const; // P^T r
    Vec project(const Vec& fine_x) const;        // Q x

    /// Aggregate-sum restriction of a per-cell vector (R_s block).
    Vec restrict_cells(const Vec& fine_cells) const;
};

struct HierarchyConfig
{
    int levels = 3;
    std::vector<double> coarsening_factors{32.0}; // per level, last repeated
    int well_layers = 4;
    std::int64_t well_edge_scale = 1000000;
    std::uint64_t seed = 0;
};

/// Nested multilevel hierarchy. Level 0 is the fine problem; each coarser
/// problem stores the components needed to evaluate its residual without
/// fine-level work, and agrees with R r(P x) by construction.
class Hierarchy
{
public:
    Hierarchy(const Mesh& mesh, const WellSet& wells, const FluidModel& fluid,
              const HierarchyConfig& config);

    int num_levels() const { return static_cast<int>(problems_.size()); }
    const LevelProblem& problem(int level) const { return problems_[level]; }
    LevelProblem& problem(int level) { return problems_[level]; }
    const LevelTransfer& transfer(int level) const { return transfers_[level]; }

    /// Aggregate count per level (excluding wells).
    std::vector<int> level_sizes() const;

    /// Refresh dt and the time-lag vectors on every level.
    void set_time_step(double dt, const Vec& s_prev_fine);

private:
    std::vector<LevelProblem> problems_;
    std::vector<LevelTransfer> transfers_;
};

/// One coarsening step: partitions the level's cell graph (well-aware),
/// keeps wells as singleton vertices, bundles faces by aggregate pairs and
/// perforations by (well, aggregate).
std::pair<LevelProblem, LevelTransfer> coarsen_level(const LevelProblem& fine,
                                                     const Partition& part);

/// Cell-connectivity graph of an arbitrary level (edge weights = bundled
/// fine-face counts).
ConnectivityGraph level_cell_graph(const LevelProblem& prob);

} // namespace fasflow

#endif
