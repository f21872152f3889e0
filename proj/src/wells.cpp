#include "fasflow/wells.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>

namespace fasflow {

WellSet::WellSet(std::vector<Well> wells) : wells_(std::move(wells))
{
    perf_offset_.reserve(wells_.size());
    for (int w = 0; w < static_cast<int>(wells_.size()); ++w) {
        const Well& well = wells_[w];
        perf_offset_.push_back(static_cast<int>(perf_cell_.size()));
        if (well.perforations.empty())
            throw std::invalid_argument("well '" + well.name + "' has no perforations");
        std::set<int> cells;
        for (const Perforation& p : well.perforations) {
            if (p.well_index <= 0.0)
                throw std::invalid_argument("well '" + well.name +
                                            "': well index must be positive");
            if (!cells.insert(p.cell).second)
                throw std::invalid_argument("well '" + well.name +
                                            "': duplicate perforated cell");
            perf_well_.push_back(w);
            perf_cell_.push_back(p.cell);
            perf_wi_.push_back(p.well_index);
        }
    }
}

void WellSet::validate_against(const Mesh& mesh) const
{
    for (int c : perf_cell_)
        if (c < 0 || c >= mesh.num_cells())
            throw std::invalid_argument("perforation references a nonexistent cell");
}

std::vector<double> perforation_residuals(const Well& well, const FluidModel& fluid,
                                          std::span<const double> sigma,
                                          double p_well,
                                          std::span<const double> p_cells,
                                          std::span<const double> s_cells)
{
    const std::size_t n = well.perforations.size();
    if (sigma.size() != n || p_cells.size() != n || s_cells.size() != n)
        throw std::invalid_argument("perforation_residuals: size mismatch");
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double lam = fluid.total_mobility(s_cells[i]);
        const double wi = well.perforations[i].well_index;
        r[i] = sigma[i] / (lam * wi) - (p_cells[i] - p_well);
    }
    return r;
}

double control_residual(const Well& well, double p_well, std::span<const double> sigma)
{
    if (well.control == WellControl::Bhp)
        return p_well - well.target;
    double total = 0.0;
    for (double s : sigma) total += s;
    return -total - well.target;
}

double peaceman_well_index(double dx, double dy, double dz, double kx, double ky,
                           double r_w, double skin)
{
    if (dx <= 0.0 || dy <= 0.0 || dz <= 0.0)
        throw std::invalid_argument("peaceman_well_index: cell dimensions must be positive");
    if (kx <= 0.0 || ky <= 0.0)
        throw std::invalid_argument("peaceman_well_index: kx, ky must be positive");
    if (r_w <= 0.0)
        throw std::invalid_argument("peaceman_well_index: wellbore radius must be positive");

    const double ratio = ky / kx;
    const double r_o = 0.28 *
                       std::sqrt(std::sqrt(ratio) * dx * dx + std::sqrt(1.0 / ratio) * dy * dy) /
                       (std::pow(ratio, 0.25) + std::pow(1.0 / ratio, 0.25));
    if (r_o <= r_w)
        throw std::invalid_argument(
            "peaceman_well_index: equivalent radius does not exceed wellbore radius");
    return 2.0 * std::numbers::pi * std::sqrt(kx * ky) * dz / (std::log(r_o / r_w) + skin);
}

} // namespace fasflow
