#ifndef FASFLOW_TEST_FIXTURES_HPP
#define FASFLOW_TEST_FIXTURES_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "fasflow/assembly.hpp"
#include "fasflow/fluid.hpp"
#include "fasflow/grid.hpp"
#include "fasflow/wells.hpp"

namespace fasflow::testing {

inline Mesh uniform_mesh(int nx, int ny, int nz, double k = 1e-13, double h = 10.0,
                         double poro = 0.2)
{
    const std::size_t nc = static_cast<std::size_t>(nx) * ny * nz;
    return build_cartesian_mesh(nx, ny, nz, h, h, h,
                                std::vector<Vec3>(nc, Vec3{k, k, k}),
                                std::vector<double>(nc, poro));
}

inline Mesh lognormal_mesh(int nx, int ny, int nz, double h, std::uint64_t seed)
{
    const std::size_t nc = static_cast<std::size_t>(nx) * ny * nz;
    std::mt19937_64 rng(seed);
    std::vector<Vec3> perm(nc);
    for (auto& p : perm) {
        const double u = (rng() >> 11) * 0x1p-53;
        const double k = 1e-14 * std::pow(10.0, 2.0 * u);
        p = {k, k, k};
    }
    return build_cartesian_mesh(nx, ny, nz, h, h, h, perm,
                                std::vector<double>(nc, 0.2));
}

/// column injector + column producer in opposite corners of a Cartesian mesh
inline WellSet corner_wells(const Mesh& mesh, double rate = 3e-5, double bhp = 1e6)
{
    const auto d = mesh.cartesian_dims();
    auto column = [&](int i, int j) {
        std::vector<Perforation> perfs;
        for (int k = 0; k < d[2]; ++k) {
            Perforation p;
            p.cell = i + d[0] * (j + d[1] * k);
            const Cell& cell = mesh.cell(p.cell);
            const Vec3 h = mesh.cartesian_spacing();
            p.well_index =
                peaceman_well_index(h[0], h[1], h[2], cell.perm[0], cell.perm[1], 0.1);
            perfs.push_back(p);
        }
        return perfs;
    };
    std::vector<Well> wells(2);
    wells[0].name = "inj";
    wells[0].control = WellControl::Rate;
    wells[0].target = rate;
    wells[0].perforations = column(0, 0);
    wells[1].name = "prod";
    wells[1].control = WellControl::Bhp;
    wells[1].target = bhp;
    wells[1].perforations = column(d[0] - 1, d[1] - 1);
    return WellSet(std::move(wells));
}

/// physically scaled randomized state with saturations in (s_lo, s_hi) and
/// fluxes bounded away from zero
inline Vec random_state(const BlockLayout& lo, std::uint64_t seed, double s_lo = 0.05,
                        double s_hi = 0.95)
{
    std::mt19937_64 rng(seed);
    auto uniform = [&rng](double a, double b) {
        return a + (b - a) * ((rng() >> 11) * 0x1p-53);
    };
    Vec x(lo.total());
    for (int e = 0; e < lo.n_faces; ++e) {
        const double mag = uniform(1e-6, 1e-4);
        x[lo.sigma_r(e)] = (rng() & 1) ? mag : -mag;
    }
    for (int p = 0; p < lo.n_perfs; ++p) {
        const double mag = uniform(1e-6, 1e-4);
        x[lo.sigma_w(p)] = (rng() & 1) ? mag : -mag;
    }
    for (int c = 0; c < lo.n_cells; ++c) x[lo.p_r(c)] = uniform(9e5, 1.2e6);
    for (int w = 0; w < lo.n_wells; ++w) x[lo.p_w(w)] = uniform(9e5, 1.2e6);
    for (int c = 0; c < lo.n_cells; ++c) x[lo.s(c)] = uniform(s_lo, s_hi);
    return x;
}

} // namespace fasflow::testing

#endif
