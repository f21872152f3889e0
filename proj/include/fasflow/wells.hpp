#ifndef FASFLOW_WELLS_HPP
#define FASFLOW_WELLS_HPP

#include <span>
#include <string>
#include <vector>

#include "fasflow/fluid.hpp"
#include "fasflow/grid.hpp"

namespace fasflow {

enum class WellControl { Bhp, Rate };

struct Perforation
{
    int cell = -1;        // perforated reservoir cell
    double well_index = 0.0; // Peaceman well index, m^3
    double r_w = 0.1;     // wellbore radius, m
};

/// A vertical well under either BHP control (producer, target pressure in Pa)
/// or rate control (wetting-phase injector, target volumetric rate in m^3/s).
struct Well
{
    std::string name;
    WellControl control = WellControl::Bhp;
    double target = 0.0;
    std::vector<Perforation> perforations;

    bool is_injector() const { return control == WellControl::Rate; }
};

/// Immutable set of wells with the global perforation ordering used by the
/// perforation-flux block: well-major, perforations in the order given.
class WellSet
{
public:
    WellSet() = default;
    explicit WellSet(std::vector<Well> wells);

    int num_wells() const { return static_cast<int>(wells_.size()); }
    int num_perforations() const { return static_cast<int>(perf_cell_.size()); }
    const Well& well(int w) const { return wells_[w]; }
    const std::vector<Well>& wells() const { return wells_; }

    /// Global perforation index -> (well, local perforation, cell).
    int perf_well(int p) const { return perf_well_[p]; }
    int perf_cell(int p) const { return perf_cell_[p]; }
    double perf_well_index(int p) const { return perf_wi_[p]; }

    /// First global perforation index of well w.
    int perf_offset(int w) const { return perf_offset_[w]; }

    void validate_against(const Mesh& mesh) const;

private:
    std::vector<Well> wells_;
    std::vector<int> perf_well_;
    std::vector<int> perf_cell_;
    std::vector<double> perf_wi_;
    std::vector<int> perf_offset_;
};

/// Perforation-flux residuals of one well, one entry per perforation:
///   sigma_i / (lambda(s_{K(i)}) WI_i) - (p_{K(i)} - p_well).
/// sigma > 0 is flow from the reservoir into the well (production);
/// injection makes sigma negative.
std::vector<double> perforation_residuals(const Well& well, const FluidModel& fluid,
                                          std::span<const double> sigma,
                                          double p_well,
                                          std::span<const double> p_cells,
                                          std::span<const double> s_cells);

/// Control-equation residual: p_well - target for BHP wells,
/// -sum_i sigma_i - target for rate-controlled injectors.
double control_residual(const Well& well, double p_well,
                        std::span<const double> sigma);

/// Peaceman well index for a vertical segment through a Cartesian cell:
///   WI = 2 pi sqrt(kx ky) dz / (ln(r_o / r_w) + skin),
///   r_o = 0.28 sqrt(sqrt(ky/kx) dx^2 + sqrt(kx/ky) dy^2)
///             / ((ky/kx)^{1/4} + (kx/ky)^{1/4}).
/// Throws if the equivalent radius does not exceed the wellbore radius.
double peaceman_well_index(double dx, double dy, double dz, double kx, double ky,
                           double r_w, double skin = 0.0);

} // namespace fasflow

#endif
