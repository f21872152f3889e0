#include "fasflow/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fasflow {

namespace {

double bhp_datum(const WellSet& wells)
{
    for (const Well& w : wells.wells())
        if (w.control == WellControl::Bhp) return w.target;
    throw std::invalid_argument(
        "configuration needs at least one BHP well as pressure datum");
}

} // namespace

double total_injection_rate(const WellSet& wells)
{
    double q = 0.0;
    for (const Well& w : wells.wells())
        if (w.control == WellControl::Rate) q += std::abs(w.target);
    return q;
}

Vec initial_state(const SimCase& sim_case)
{
    const LevelProblem prob =
        build_fine_problem(sim_case.mesh, sim_case.wells, sim_case.fluid);
    const BlockLayout& lo = prob.layout;
    const double p0 = bhp_datum(sim_case.wells);

    Vec x = Vec::Zero(lo.total());
    for (int c = 0; c < lo.n_cells; ++c) x[lo.p_r(c)] = p0;
    for (int w = 0; w < lo.n_wells; ++w) {
        const Well& well = sim_case.wells.well(w);
        x[lo.p_w(w)] = well.control == WellControl::Bhp ? well.target : p0;
    }
    return x;
}

namespace {

void audit_step(const LevelProblem& prob, const Vec& x, double injection,
                StepReport& report)
{
    const BlockLayout& lo = prob.layout;
    const Vec r = assemble_residual(prob, x);
    const double scale = std::max(injection, 1e-300);
    double net = 0.0;
    for (int p = 0; p < lo.n_perfs; ++p) net += x[lo.sigma_w(p)];
    report.well_balance_error = std::abs(net) / scale;
    double div = 0.0;
    for (int c = 0; c < lo.n_cells; ++c) div = std::max(div, std::abs(r[lo.p_r(c)]));
    report.max_divergence = div / scale;
    double viol = 0.0;
    for (int c = 0; c < lo.n_cells; ++c) {
        viol = std::max(viol, -x[lo.s(c)]);
        viol = std::max(viol, x[lo.s(c)] - 1.0);
    }
    report.max_sat_violation = std::max(viol, 0.0);
}

} // namespace

SimulationResult run_simulation(const SimCase& sim_case, const SolverConfig& config)
{
    SimulationResult result;
    bhp_datum(sim_case.wells); // validates the pressure datum
    if (sim_case.time.nu <= 1.0)
        throw std::invalid_argument("time ramp factor nu must be > 1");
    if (sim_case.time.dt0 <= 0.0 || sim_case.time.t_final <= 0.0)
        throw std::invalid_argument("dt0 and t_final must be positive");

    // PVI times convert through pore volume over total injection rate
    double time_scale = 1.0;
    const double injection = total_injection_rate(sim_case.wells);
    if (sim_case.time.unit == TimeUnit::Pvi) {
        if (injection <= 0.0)
            throw std::invalid_argument("PVI time unit requires a positive injection rate");
        time_scale = sim_case.mesh.total_pore_volume() / injection;
    }
    const double t_final = sim_case.time.t_final * time_scale;

    HierarchyConfig hconfig = config.hierarchy;
    if (config.kind == SolverKind::Newton) hconfig.levels = 1;
    Hierarchy hierarchy(sim_case.mesh, sim_case.wells, sim_case.fluid, hconfig);
    result.level_sizes = hierarchy.level_sizes();

    FasSolver solver(hierarchy, config.cycle);
    const LevelProblem& fine = hierarchy.problem(0);
    const BlockLayout& lo = fine.layout;

    Vec x = initial_state(sim_case);
    Vec s_prev = Vec::Zero(lo.n_cells);

    double t = 0.0;
    double dt = sim_case.time.dt0 * time_scale;
    int attempt = 0;

    const auto sim_start = std::chrono::steady_clock::now();
    for (int step = 1; step <= sim_case.time.max_steps && t < t_final * (1.0 - 1e-12);
         ++step) {
        if (step > 1) dt *= sim_case.time.nu;
        double dt_try = std::min(dt, t_final - t);

        bool advanced = false;
        for (int retry = 0; retry <= config.max_retries; ++retry) {
            Vec x_try = x;
            solver.set_time_step(dt_try, s_prev);

            const auto start = std::chrono::steady_clock::now();
            OuterResult outer = solver.solve(x_try);
            const auto stop = std::chrono::steady_clock::now();

            StepReport report;
            report.step = ++attempt;
            report.dt = dt_try;
            report.nonlinear_iter = outer.iterations;
            report.linear_iter = outer.linear_iterations;
            report.converged = outer.converged;
            report.step_time = std::chrono::duration<double>(stop - start).count();
            report.cfl = cfl_number(fine, x_try, dt_try);
            if (outer.converged) audit_step(fine, x_try, injection, report);
            result.reports.push_back(report);

            if (config.verbose) {
                std::cout << "step " << report.step << "  dt " << report.dt << "  CFL "
                          << report.cfl << "  iters " << report.nonlinear_iter
                          << (report.converged ? "" : "  (failed)") << "\n";
            }

            if (outer.converged) {
                x = std::move(x_try);
                for (int c = 0; c < lo.n_cells; ++c) s_prev[c] = x[lo.s(c)];
                t += dt_try;
                dt = dt_try;
                advanced = true;
                break;
            }
            dt_try *= 0.5;
        }
        if (!advanced) {
            result.state = x;
            result.message = "aborted: step failed after " +
                             std::to_string(config.max_retries) + " dt halvings";
            result.total_solve_time =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - sim_start)
                    .count();
            return result;
        }
    }

    result.state = x;
    result.completed = true;
    result.total_solve_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - sim_start)
            .count();
    return result;
}

std::vector<Vec3> generate_lognormal_field(int nx, int ny, int nz,
                                           const LognormalSpec& spec)
{
    const std::size_t nc = static_cast<std::size_t>(nx) * ny * nz;
    std::vector<double> logk(nc, 0.0);
    std::vector<bool> covered(static_cast<std::size_t>(nz), false);
    for (const LayerSpec& layer : spec.layers) {
        if (layer.z0 < 0 || layer.z1 > nz || layer.z0 >= layer.z1)
            throw std::invalid_argument("lognormal layer outside the mesh");
        if (layer.k_min <= 0.0 || layer.k_max < layer.k_min)
            throw std::invalid_argument("lognormal layer bounds invalid");
        for (int z = layer.z0; z < layer.z1; ++z) {
            if (covered[z]) throw std::invalid_argument("lognormal layers overlap");
            covered[z] = true;
        }
    }
    for (int z = 0; z < nz; ++z)
        if (!covered[z]) throw std::invalid_argument("lognormal layers do not cover mesh");

    std::mt19937_64 rng(spec.seed);
    auto uniform = [&rng]() {
        return (static_cast<double>(rng() >> 11) + 0.5) * 0x1p-53;
    };

    auto idx = [nx, ny](int i, int j, int k) { return i + nx * (j + ny * k); };

    for (const LayerSpec& layer : spec.layers) {
        const int lz = layer.z1 - layer.z0;
        std::vector<double> g(static_cast<std::size_t>(nx) * ny * lz);
        for (auto& v : g) {
            // Box-Muller with platform-independent uniforms
            const double u1 = uniform();
            const double u2 = uniform();
            v = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        }
        auto lidx = [nx, ny](int i, int j, int k) { return i + nx * (j + ny * k); };
        std::vector<double> tmp(g.size());
        for (int pass = 0; pass < spec.smoothing; ++pass) {
            for (int k = 0; k < lz; ++k)
                for (int j = 0; j < ny; ++j)
                    for (int i = 0; i < nx; ++i) {
                        double acc = g[lidx(i, j, k)];
                        int n = 1;
                        if (i > 0) { acc += g[lidx(i - 1, j, k)]; ++n; }
                        if (i + 1 < nx) { acc += g[lidx(i + 1, j, k)]; ++n; }
                        if (j > 0) { acc += g[lidx(i, j - 1, k)]; ++n; }
                        if (j + 1 < ny) { acc += g[lidx(i, j + 1, k)]; ++n; }
                        if (k > 0) { acc += g[lidx(i, j, k - 1)]; ++n; }
                        if (k + 1 < lz) { acc += g[lidx(i, j, k + 1)]; ++n; }
                        tmp[lidx(i, j, k)] = acc / n;
                    }
            std::swap(g, tmp);
        }

        const double gmin = *std::min_element(g.begin(), g.end());
        const double gmax = *std::max_element(g.begin(), g.end());
        const double lo = std::log(layer.k_min);
        const double hi = std::log(layer.k_max);
        for (int k = 0; k < lz; ++k)
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) {
                    double lk;
                    if (hi == lo) {
                        lk = lo;
                    } else if (gmax == gmin) {
                        lk = 0.5 * (lo + hi);
                    } else {
                        lk = lo + (hi - lo) * (g[lidx(i, j, k)] - gmin) / (gmax - gmin);
                    }
                    logk[idx(i, j, layer.z0 + k)] = lk;
                }
    }

    std::vector<Vec3> perm(nc);
    for (std::size_t c = 0; c < nc; ++c) {
        const double k = std::exp(logk[c]);
        perm[c] = {k, k, k};
    }
    return perm;
}

void write_step_csv(const std::vector<StepReport>& reports, std::ostream& out)
{
    out << "step,dt,CFL,nonlinear_iter,linear_iter,step_time,converged\n";
    out.precision(17);
    for (const StepReport& r : reports)
        out << r.step << "," << r.dt << "," << r.cfl << "," << r.nonlinear_iter << ","
            << r.linear_iter << "," << r.step_time << "," << (r.converged ? 1 : 0)
            << "\n";
}

void write_vtk(const Mesh& mesh, const Vec& pressure, const Vec& saturation,
               std::ostream& out)
{
    const int nc = mesh.num_cells();
    out.precision(12);
    out << "# vtk DataFile Version 3.0\n";
    out << "fasflow fields\n";
    out << "ASCII\n";
    if (mesh.is_cartesian()) {
        const auto dims = mesh.cartesian_dims();
        const Vec3 h = mesh.cartesian_spacing();
        out << "DATASET STRUCTURED_POINTS\n";
        out << "DIMENSIONS " << dims[0] + 1 << " " << dims[1] + 1 << " " << dims[2] + 1
            << "\n";
        out << "ORIGIN 0 0 0\n";
        out << "SPACING " << h[0] << " " << h[1] << " " << h[2] << "\n";
    } else {
        out << "DATASET UNSTRUCTURED_GRID\n";
        out << "POINTS " << nc << " double\n";
        for (int c = 0; c < nc; ++c)
            out << mesh.cell(c).center[0] << " " << mesh.cell(c).center[1] << " "
                << mesh.cell(c).center[2] << "\n";
        out << "CELLS " << nc << " " << 2 * nc << "\n";
        for (int c = 0; c < nc; ++c) out << "1 " << c << "\n";
        out << "CELL_TYPES " << nc << "\n";
        for (int c = 0; c < nc; ++c) out << "1\n"; // VTK_VERTEX
    }
    out << "CELL_DATA " << nc << "\n";
    out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
    for (int c = 0; c < nc; ++c) out << pressure[c] << "\n";
    out << "SCALARS saturation double 1\nLOOKUP_TABLE default\n";
    for (int c = 0; c < nc; ++c) out << saturation[c] << "\n";
}

void write_outputs(const SimCase& sim_case, const SolverConfig& config,
                   const SimulationResult& result, const std::string& dir)
{
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    {
        std::ofstream csv(fs::path(dir) / "steps.csv");
        if (!csv) throw std::runtime_error("cannot write steps.csv in " + dir);
        write_step_csv(result.reports, csv);
    }
    {
        const BlockLayout lo{sim_case.mesh.num_faces(), sim_case.wells.num_perforations(),
                             sim_case.mesh.num_cells(), sim_case.wells.num_wells()};
        Vec p(lo.n_cells), s(lo.n_cells);
        for (int c = 0; c < lo.n_cells; ++c) {
            p[c] = result.state[lo.p_r(c)];
            s[c] = result.state[lo.s(c)];
        }
        std::ofstream vtk(fs::path(dir) / "fields.vtk");
        if (!vtk) throw std::runtime_error("cannot write fields.vtk in " + dir);
        write_vtk(sim_case.mesh, p, s, vtk);
    }
    {
        nlohmann::json meta;
        meta["solver"] = config.kind == SolverKind::Fas ? "fas" : "newton";
        meta["levels"] = config.hierarchy.levels;
        meta["level_sizes"] = result.level_sizes;
        meta["residual_norm"] =
            "block-scaled l2 (flux rows / max BHP, conservation and rate rows / total "
            "injection rate, transport rows / (pore volume / dt)); converged when <= rtol "
            "* initial or <= atol";
        meta["rtol"] = config.cycle.rtol;
        meta["atol"] = config.cycle.atol;
        meta["time_unit"] = sim_case.time.unit == TimeUnit::Pvi ? "pvi" : "s";
        meta["completed"] = result.completed;
        meta["total_solve_time_s"] = result.total_solve_time;
        meta["note_csv_determinism"] =
            "all CSV columns except step_time are deterministic for a fixed config and "
            "seed with the direct linear solver";
        std::ofstream out(fs::path(dir) / "run_meta.json");
        out << meta.dump(2) << "\n";
    }
}

namespace {

using nlohmann::json;

FluidModel parse_fluid(const json& j)
{
    return FluidModel(j.value("mu_w", 1e-3), j.value("mu_nw", 5e-3),
                      j.value("gamma", 2.0));
}

Mesh parse_mesh(const json& j, std::vector<double>& cell_dims)
{
    const std::string type = j.value("type", "cartesian");
    if (type == "file") {
        cell_dims.clear();
        return read_mesh_file(j.at("path").get<std::string>());
    }
    if (type != "cartesian")
        throw std::invalid_argument("mesh type must be 'cartesian' or 'file'");

    const int nx = j.at("nx"), ny = j.at("ny"), nz = j.at("nz");
    const double hx = j.at("hx"), hy = j.at("hy"), hz = j.at("hz");
    const std::size_t nc = static_cast<std::size_t>(nx) * ny * nz;

    std::vector<double> poro(nc, j.value("porosity", 0.2));
    std::vector<Vec3> perm;

    const json& pj = j.at("permeability");
    const std::string ptype = pj.value("type", "uniform");
    if (ptype == "uniform") {
        const double kx = pj.at("kx"), ky = pj.at("ky"), kz = pj.at("kz");
        perm.assign(nc, Vec3{kx, ky, kz});
    } else if (ptype == "lognormal") {
        LognormalSpec spec;
        spec.smoothing = pj.value("smoothing", 3);
        spec.seed = pj.value("seed", 0);
        for (const json& lj : pj.at("layers"))
            spec.layers.push_back({lj.at("z0"), lj.at("z1"), lj.at("k_min"),
                                   lj.at("k_max")});
        perm = generate_lognormal_field(nx, ny, nz, spec);
    } else {
        throw std::invalid_argument("permeability type must be 'uniform' or 'lognormal'");
    }
    cell_dims = {hx, hy, hz};
    return build_cartesian_mesh(nx, ny, nz, hx, hy, hz, perm, poro);
}

WellSet parse_wells(const json& j, const Mesh& mesh, const std::vector<double>& dims)
{
    std::vector<Well> wells;
    for (const json& wj : j) {
        Well w;
        w.name = wj.value("name", "well" + std::to_string(wells.size()));
        const std::string control = wj.at("control");
        if (control == "bhp")
            w.control = WellControl::Bhp;
        else if (control == "rate")
            w.control = WellControl::Rate;
        else
            throw std::invalid_argument("well control must be 'bhp' or 'rate'");
        w.target = wj.at("target");
        const double r_w = wj.value("r_w", 0.1);
        const double skin = wj.value("skin", 0.0);

        std::vector<int> cells;
        if (wj.contains("column")) {
            if (!mesh.is_cartesian())
                throw std::invalid_argument("well 'column' requires a Cartesian mesh");
            const auto d = mesh.cartesian_dims();
            const int i = wj["column"].at("i"), jj = wj["column"].at("j");
            if (i < 0 || i >= d[0] || jj < 0 || jj >= d[1])
                throw std::invalid_argument("well column outside the mesh");
            for (int k = 0; k < d[2]; ++k) cells.push_back(i + d[0] * (jj + d[1] * k));
        } else {
            cells = wj.at("perforations").get<std::vector<int>>();
        }

        std::vector<double> wi;
        if (wj.contains("wi_override"))
            wi = wj["wi_override"].get<std::vector<double>>();
        if (!wi.empty() && wi.size() != cells.size())
            throw std::invalid_argument("wi_override size mismatch for well " + w.name);

        for (std::size_t i = 0; i < cells.size(); ++i) {
            Perforation perf;
            perf.cell = cells[i];
            perf.r_w = r_w;
            if (!wi.empty()) {
                perf.well_index = wi[i];
            } else {
                if (dims.empty())
                    throw std::invalid_argument(
                        "well " + w.name +
                        ": wi_override is required for file meshes");
                if (cells[i] < 0 || cells[i] >= mesh.num_cells())
                    throw std::invalid_argument("perforation outside the mesh");
                const Cell& cell = mesh.cell(cells[i]);
                perf.well_index = peaceman_well_index(dims[0], dims[1], dims[2],
                                                      cell.perm[0], cell.perm[1], r_w,
                                                      skin);
            }
            w.perforations.push_back(perf);
        }
        wells.push_back(std::move(w));
    }
    WellSet set(std::move(wells));
    set.validate_against(mesh);
    return set;
}

TimeConfig parse_time(const json& j)
{
    TimeConfig t;
    t.dt0 = j.at("dt0");
    t.nu = j.value("nu", 2.0);
    t.t_final = j.at("t_final");
    const std::string unit = j.value("unit", "s");
    if (unit == "pvi")
        t.unit = TimeUnit::Pvi;
    else if (unit == "s")
        t.unit = TimeUnit::Seconds;
    else
        throw std::invalid_argument("time unit must be 's' or 'pvi'");
    t.max_steps = j.value("max_steps", 1000);
    return t;
}

json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json j;
    in >> j;
    return j;
}

} // namespace

SimCase load_case(const std::string& path)
{
    const json j = read_json(path);
    std::vector<double> dims;
    Mesh mesh = parse_mesh(j.at("mesh"), dims);
    WellSet wells = parse_wells(j.at("wells"), mesh, dims);
    FluidModel fluid = parse_fluid(j.value("fluid", json::object()));
    TimeConfig time = parse_time(j.at("time"));
    return SimCase{std::move(mesh), std::move(wells), std::move(fluid), time};
}

SolverConfig load_solver_config(const std::string& path)
{
    const json full = read_json(path);
    const json j = full.value("solver", nlohmann::json::object());
    SolverConfig c;
    const std::string kind = j.value("kind", "fas");
    if (kind == "fas")
        c.kind = SolverKind::Fas;
    else if (kind == "newton")
        c.kind = SolverKind::Newton;
    else
        throw std::invalid_argument("solver kind must be 'fas' or 'newton'");
    c.hierarchy.levels = j.value("levels", 3);
    if (j.contains("coarsening_factor"))
        c.hierarchy.coarsening_factors = {j["coarsening_factor"].get<double>()};
    c.hierarchy.well_layers = j.value("well_layers", 4);
    c.hierarchy.well_edge_scale =
        static_cast<std::int64_t>(j.value("well_edge_scale", 1e6));
    c.hierarchy.seed = j.value("seed", 0);
    c.cycle.rtol = j.value("tol", 1e-6);
    c.cycle.max_outer = j.value("max_nonlinear", 60);
    c.cycle.theta = j.value("theta", 0.5);
    c.cycle.max_backtrack = j.value("max_backtrack", 4);
    c.cycle.smoother.alpha_split = j.value("alpha_split", 0.5);
    const std::string linear = j.value("linear", "cpr");
    if (linear == "direct")
        c.cycle.smoother.linear.method = LinearMethod::Direct;
    else if (linear == "cpr")
        c.cycle.smoother.linear.method = LinearMethod::Cpr;
    else
        throw std::invalid_argument("linear solver must be 'direct' or 'cpr'");
    c.cycle.smoother.linear.rtol = j.value("lin_rtol", 1e-8);
    c.cycle.smoother.linear.max_iter = j.value("lin_maxiter", 200);
    c.max_retries = j.value("max_retries", 3);
    return c;
}

} // namespace fasflow
