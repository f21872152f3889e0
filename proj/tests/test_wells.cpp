#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fasflow/wells.hpp"

using namespace fasflow;

TEST_CASE("peaceman equivalent radius, isotropic square cell")
{
    // r_o = 0.28 sqrt(2 h^2) / 2 ~ 0.19799 h; WI = 2 pi k dz / ln(r_o/r_w)
    const double h = 10.0, k = 1e-13, dz = 2.0, r_w = 0.1;
    const double r_o = 0.28 * std::sqrt(2.0 * h * h) / 2.0;
    CHECK(r_o == doctest::Approx(0.1979899 * h).epsilon(1e-6));
    const double wi = peaceman_well_index(h, h, dz, k, k, r_w);
    const double expected = 2.0 * std::numbers::pi * k * dz / std::log(r_o / r_w);
    CHECK(wi / expected == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("peaceman with r_w = r_o/e gives 2 pi k dz")
{
    const double h = 5.0, k = 2e-14, dz = 1.3;
    const double r_o = 0.28 * std::sqrt(2.0 * h * h) / 2.0;
    const double wi = peaceman_well_index(h, h, dz, k, k, r_o / std::numbers::e);
    CHECK(wi / (2.0 * std::numbers::pi * k * dz) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("peaceman linear in dz and error cases")
{
    const double wi1 = peaceman_well_index(3.0, 3.0, 1.0, 1e-13, 1e-13, 0.1);
    const double wi2 = peaceman_well_index(3.0, 3.0, 2.0, 1e-13, 1e-13, 0.1);
    CHECK(wi2 / wi1 == doctest::Approx(2.0).epsilon(1e-14));

    // cell too small for the model
    CHECK_THROWS(peaceman_well_index(0.1, 0.1, 1.0, 1e-13, 1e-13, 0.1));
    CHECK_THROWS(peaceman_well_index(-1.0, 1.0, 1.0, 1e-13, 1e-13, 0.1));
    CHECK_THROWS(peaceman_well_index(1.0, 1.0, 1.0, 0.0, 1e-13, 0.1));
}

TEST_CASE("anisotropy enters through sqrt(kx ky)")
{
    const double wi_iso = peaceman_well_index(3.0, 3.0, 1.0, 4e-13, 4e-13, 0.1);
    const double wi_aniso = peaceman_well_index(3.0, 3.0, 1.0, 16e-13, 1e-13, 0.1);
    // same sqrt(kx ky); r_o differs, so values are close but not equal
    CHECK(wi_aniso / wi_iso > 0.8);
    CHECK(wi_aniso / wi_iso < 1.2);
    CHECK(wi_aniso / wi_iso != doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("perforation residuals: equilibrium and unit case")
{
    FluidModel fluid(1e-3, 5e-3, 2.0);
    Well well;
    well.control = WellControl::Bhp;
    well.target = 1e6;
    well.perforations = {{0, 1e-12, 0.1}};

    // p_well = p_cell, sigma = 0 -> residual 0
    {
        const double sigma[] = {0.0};
        const double p[] = {1e6};
        const double s[] = {1.0};
        auto r = perforation_residuals(well, fluid, sigma, 1e6, p, s);
        CHECK(r.size() == 1);
        CHECK(r[0] == 0.0);
    }
    // lambda = 1000 (s = 1), WI = 1e-12, sigma = 1e-9, dp = 0 -> residual 1 Pa
    {
        const double sigma[] = {1e-9};
        const double p[] = {2e6};
        const double s[] = {1.0};
        auto r = perforation_residuals(well, fluid, sigma, 2e6, p, s);
        CHECK(r[0] == doctest::Approx(1.0).epsilon(1e-12));
    }
    // scaling sigma and the pressure drop together scales the residual
    {
        const double sigma[] = {3e-9};
        const double p[] = {2e6 + 2.0};
        const double s[] = {1.0};
        auto r1 = perforation_residuals(well, fluid, sigma, 2e6, p, s);
        const double sigma2[] = {6e-9};
        const double p2[] = {2e6 + 4.0};
        auto r2 = perforation_residuals(well, fluid, sigma2, 2e6, p2, s);
        CHECK(r2[0] == doctest::Approx(2.0 * r1[0]).epsilon(1e-12));
    }
}

TEST_CASE("control residuals")
{
    Well bhp;
    bhp.control = WellControl::Bhp;
    bhp.target = 1e6;
    bhp.perforations = {{0, 1e-12, 0.1}};
    CHECK(control_residual(bhp, 1e6, {}) == 0.0);
    CHECK(control_residual(bhp, 1.5e6, {}) == doctest::Approx(0.5e6));

    Well rate;
    rate.control = WellControl::Rate;
    rate.target = 3e-5;
    rate.perforations = {{0, 1e-12, 0.1}, {1, 1e-12, 0.1}};
    const double balanced[] = {-1.5e-5, -1.5e-5};
    CHECK(control_residual(rate, 0.0, balanced) == doctest::Approx(0.0));
    const double none[] = {0.0, 0.0};
    CHECK(control_residual(rate, 0.0, none) == doctest::Approx(-3e-5));
}

TEST_CASE("well set ordering and validation")
{
    std::vector<Well> wells(2);
    wells[0].name = "a";
    wells[0].perforations = {{3, 1.0, 0.1}, {5, 2.0, 0.1}};
    wells[1].name = "b";
    wells[1].perforations = {{7, 3.0, 0.1}};
    WellSet set(std::move(wells));
    CHECK(set.num_perforations() == 3);
    CHECK(set.perf_well(0) == 0);
    CHECK(set.perf_well(2) == 1);
    CHECK(set.perf_cell(1) == 5);
    CHECK(set.perf_well_index(2) == 3.0);
    CHECK(set.perf_offset(1) == 2);

    std::vector<Well> dup(1);
    dup[0].perforations = {{3, 1.0, 0.1}, {3, 1.0, 0.1}};
    CHECK_THROWS(WellSet(std::move(dup)));

    std::vector<Well> bad_wi(1);
    bad_wi[0].perforations = {{3, 0.0, 0.1}};
    CHECK_THROWS(WellSet(std::move(bad_wi)));
}
