#include "fasflow/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fasflow {

void LevelProblem::set_fine_time_step(double dt_step, const Vec& s_prev)
{
    if (dt_step <= 0.0)
        throw std::invalid_argument("time step must be positive");
    if (s_prev.size() != layout.n_cells)
        throw std::invalid_argument("previous saturation size mismatch");
    dt = dt_step;
    time_lag.resize(layout.n_cells);
    for (int c = 0; c < layout.n_cells; ++c)
        time_lag[c] = pore_volume[c] / dt * s_prev[c];
}

void LevelProblem::validate() const
{
    if (layout.n_faces != static_cast<int>(faces.size()) ||
        layout.n_perfs != static_cast<int>(perfs.size()) ||
        layout.n_cells != static_cast<int>(pore_volume.size()) ||
        layout.n_wells != static_cast<int>(wells.size()))
        throw std::invalid_argument("LevelProblem: layout inconsistent with data");
    if (!fluid)
        throw std::invalid_argument("LevelProblem: no fluid model");
}

LevelProblem build_fine_problem(const Mesh& mesh, const WellSet& wells,
                                const FluidModel& fluid)
{
    wells.validate_against(mesh);
    LevelProblem prob;
    prob.layout.n_faces = mesh.num_faces();
    prob.layout.n_perfs = wells.num_perforations();
    prob.layout.n_cells = mesh.num_cells();
    prob.layout.n_wells = wells.num_wells();
    prob.fluid = &fluid;

    prob.faces.reserve(mesh.num_faces());
    for (const Face& f : mesh.faces())
        prob.faces.push_back({f.k, f.l, 1.0 / f.trans_k, 1.0 / f.trans_l, 1.0});

    prob.perfs.reserve(wells.num_perforations());
    prob.well_perfs.resize(wells.num_wells());
    for (int p = 0; p < wells.num_perforations(); ++p) {
        prob.perfs.push_back(
            {wells.perf_cell(p), wells.perf_well(p), 1.0 / wells.perf_well_index(p), 1.0});
        prob.well_perfs[wells.perf_well(p)].push_back(p);
    }

    prob.wells.reserve(wells.num_wells());
    for (const Well& w : wells.wells())
        prob.wells.push_back({w.control, w.target});

    prob.pore_volume.resize(mesh.num_cells());
    prob.cell_volume.resize(mesh.num_cells());
    for (int c = 0; c < mesh.num_cells(); ++c) {
        prob.pore_volume[c] = mesh.cell(c).volume * mesh.cell(c).porosity;
        prob.cell_volume[c] = mesh.cell(c).volume;
    }

    prob.time_lag = Vec::Zero(mesh.num_cells());
    return prob;
}

namespace {

/// Upwind fractional-flow value of a perforation: producers take the
/// reservoir cell value, injectors inject pure wetting phase (f = 1).
inline double perf_fw(const LevelProblem& prob, const PerfConn& pf, const Vec& x)
{
    if (prob.wells[pf.well].control == WellControl::Rate)
        return 1.0;
    return prob.fluid->fractional_flow(x[prob.layout.s(pf.cell)]);
}

} // namespace

Vec assemble_residual(const LevelProblem& prob, const Vec& x)
{
    const BlockLayout& lo = prob.layout;
    if (x.size() != lo.total())
        throw std::invalid_argument("assemble_residual: state size mismatch");
    const FluidModel& fluid = *prob.fluid;

    Vec r = Vec::Zero(lo.total());

    // transport time term
    for (int c = 0; c < lo.n_cells; ++c)
        r[lo.s(c)] = prob.pore_volume[c] / prob.dt * x[lo.s(c)] - prob.time_lag[c];

    for (int e = 0; e < lo.n_faces; ++e) {
        const FaceConn& f = prob.faces[e];
        const double sk = x[lo.s(f.k)];
        const double sl = x[lo.s(f.l)];
        const double sigma = x[lo.sigma_r(e)];
        const double m = f.inv_trans_k / fluid.total_mobility(sk) +
                         f.inv_trans_l / fluid.total_mobility(sl);
        r[lo.sigma_r(e)] =
            m * sigma - f.pcoef * (x[lo.p_r(f.k)] - x[lo.p_r(f.l)]);

        const double flux = f.pcoef * sigma;
        r[lo.p_r(f.k)] += flux;
        r[lo.p_r(f.l)] -= flux;

        const double fw = sigma > 0.0 ? fluid.fractional_flow(sk) : fluid.fractional_flow(sl);
        r[lo.s(f.k)] += flux * fw;
        r[lo.s(f.l)] -= flux * fw;
    }

    for (int p = 0; p < lo.n_perfs; ++p) {
        const PerfConn& pf = prob.perfs[p];
        const double sc = x[lo.s(pf.cell)];
        const double sigma = x[lo.sigma_w(p)];
        r[lo.sigma_w(p)] = pf.inv_wi / fluid.total_mobility(sc) * sigma -
                           pf.pcoef * (x[lo.p_r(pf.cell)] - x[lo.p_w(pf.well)]);

        const double flux = pf.pcoef * sigma;
        r[lo.p_r(pf.cell)] += flux;
        r[lo.s(pf.cell)] += flux * perf_fw(prob, pf, x);
    }

    for (int w = 0; w < lo.n_wells; ++w) {
        if (prob.wells[w].control == WellControl::Bhp) {
            r[lo.p_w(w)] = x[lo.p_w(w)] - prob.wells[w].target;
        } else {
            double total = 0.0;
            for (int p : prob.well_perfs[w])
                total += prob.perfs[p].pcoef * x[lo.sigma_w(p)];
            r[lo.p_w(w)] = -total - prob.wells[w].target;
        }
    }

    return r;
}

SpMat assemble_jacobian(const LevelProblem& prob, const Vec& x)
{
    const BlockLayout& lo = prob.layout;
    if (x.size() != lo.total())
        throw std::invalid_argument("assemble_jacobian: state size mismatch");
    const FluidModel& fluid = *prob.fluid;

    std::vector<Triplet> t;
    t.reserve(10 * lo.n_faces + 6 * lo.n_perfs + 2 * lo.n_cells + lo.n_wells);

    for (int c = 0; c < lo.n_cells; ++c)
        t.emplace_back(lo.s(c), lo.s(c), prob.pore_volume[c] / prob.dt);

    for (int e = 0; e < lo.n_faces; ++e) {
        const FaceConn& f = prob.faces[e];
        const double sk = x[lo.s(f.k)];
        const double sl = x[lo.s(f.l)];
        const double sigma = x[lo.sigma_r(e)];
        const double lam_k = fluid.total_mobility(sk);
        const double lam_l = fluid.total_mobility(sl);
        const int row = lo.sigma_r(e);

        t.emplace_back(row, row, f.inv_trans_k / lam_k + f.inv_trans_l / lam_l);
        t.emplace_back(row, lo.p_r(f.k), -f.pcoef);
        t.emplace_back(row, lo.p_r(f.l), f.pcoef);
        t.emplace_back(row, lo.s(f.k),
                       -sigma * f.inv_trans_k * fluid.total_mobility_deriv(sk) / (lam_k * lam_k));
        t.emplace_back(row, lo.s(f.l),
                       -sigma * f.inv_trans_l * fluid.total_mobility_deriv(sl) / (lam_l * lam_l));

        t.emplace_back(lo.p_r(f.k), row, f.pcoef);
        t.emplace_back(lo.p_r(f.l), row, -f.pcoef);

        // frozen upwind direction
        const int up = sigma > 0.0 ? f.k : f.l;
        const double fw = fluid.fractional_flow(x[lo.s(up)]);
        const double dfw = fluid.fractional_flow_deriv(x[lo.s(up)]);
        t.emplace_back(lo.s(f.k), row, f.pcoef * fw);
        t.emplace_back(lo.s(f.l), row, -f.pcoef * fw);
        t.emplace_back(lo.s(f.k), lo.s(up), f.pcoef * sigma * dfw);
        t.emplace_back(lo.s(f.l), lo.s(up), -f.pcoef * sigma * dfw);
    }

    for (int p = 0; p < lo.n_perfs; ++p) {
        const PerfConn& pf = prob.perfs[p];
        const double sc = x[lo.s(pf.cell)];
        const double sigma = x[lo.sigma_w(p)];
        const double lam = fluid.total_mobility(sc);
        const int row = lo.sigma_w(p);

        t.emplace_back(row, row, pf.inv_wi / lam);
        t.emplace_back(row, lo.p_r(pf.cell), -pf.pcoef);
        t.emplace_back(row, lo.p_w(pf.well), pf.pcoef);
        t.emplace_back(row, lo.s(pf.cell),
                       -sigma * pf.inv_wi * fluid.total_mobility_deriv(sc) / (lam * lam));

        t.emplace_back(lo.p_r(pf.cell), row, pf.pcoef);

        t.emplace_back(lo.s(pf.cell), row, pf.pcoef * perf_fw(prob, pf, x));
        if (prob.wells[pf.well].control == WellControl::Bhp)
            t.emplace_back(lo.s(pf.cell), lo.s(pf.cell),
                           pf.pcoef * sigma * fluid.fractional_flow_deriv(sc));
    }

    for (int w = 0; w < lo.n_wells; ++w) {
        if (prob.wells[w].control == WellControl::Bhp) {
            t.emplace_back(lo.p_w(w), lo.p_w(w), 1.0);
        } else {
            for (int p : prob.well_perfs[w])
                t.emplace_back(lo.p_w(w), lo.sigma_w(p), -prob.perfs[p].pcoef);
        }
    }

    SpMat jac(lo.total(), lo.total());
    jac.setFromTriplets(t.begin(), t.end());
    return jac;
}

double cfl_number(const LevelProblem& prob, const Vec& x, double dt)
{
    const BlockLayout& lo = prob.layout;
    Vec outflux = Vec::Zero(lo.n_cells);
    for (int e = 0; e < lo.n_faces; ++e) {
        const FaceConn& f = prob.faces[e];
        const double flux = f.pcoef * x[lo.sigma_r(e)];
        if (flux > 0.0)
            outflux[f.k] += flux;
        else
            outflux[f.l] -= flux;
    }
    for (int p = 0; p < lo.n_perfs; ++p) {
        const PerfConn& pf = prob.perfs[p];
        const double flux = pf.pcoef * x[lo.sigma_w(p)];
        if (flux > 0.0)
            outflux[pf.cell] += flux;
    }
    const double max_df = prob.fluid->max_fractional_flow_deriv();
    double cfl = 0.0;
    for (int c = 0; c < lo.n_cells; ++c)
        cfl = std::max(cfl, dt * outflux[c] * max_df / prob.pore_volume[c]);
    return cfl;
}

ResidualScales make_residual_scales(const LevelProblem& prob)
{
    ResidualScales sc;
    sc.pressure = 1.0;
    double injection = 0.0;
    for (const WellData& w : prob.wells) {
        if (w.control == WellControl::Bhp)
            sc.pressure = std::max(sc.pressure, std::abs(w.target));
        else
            injection += std::abs(w.target);
    }
    sc.rate = injection > 0.0 ? injection : 1e-12;
    sc.transport.resize(prob.layout.n_cells);
    for (int c = 0; c < prob.layout.n_cells; ++c)
        sc.transport[c] = prob.pore_volume[c] / prob.dt;
    return sc;
}

double scaled_norm(const LevelProblem& prob, const ResidualScales& scales, const Vec& r)
{
    const BlockLayout& lo = prob.layout;
    double acc = 0.0;
    auto add = [&acc](double v) { acc += v * v; };
    for (int e = 0; e < lo.n_faces; ++e) add(r[lo.sigma_r(e)] / scales.pressure);
    for (int p = 0; p < lo.n_perfs; ++p) add(r[lo.sigma_w(p)] / scales.pressure);
    for (int c = 0; c < lo.n_cells; ++c) add(r[lo.p_r(c)] / scales.rate);
    for (int w = 0; w < lo.n_wells; ++w) {
        const double s = prob.wells[w].control == WellControl::Bhp ? scales.pressure
                                                                   : scales.rate;
        add(r[lo.p_w(w)] / s);
    }
    for (int c = 0; c < lo.n_cells; ++c) add(r[lo.s(c)] / scales.transport[c]);
    return std::sqrt(acc);
}

} // namespace fasflow
