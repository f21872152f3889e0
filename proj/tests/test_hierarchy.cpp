#include <doctest.h>

#include <set>

#include "fasflow/hierarchy.hpp"
#include "fixtures.hpp"

using namespace fasflow;
using namespace fasflow::testing;

namespace {

struct Setup
{
    Mesh mesh;
    WellSet wells;
    FluidModel fluid;
    Hierarchy hierarchy;

    Setup(int nx, int ny, int nz, HierarchyConfig cfg, std::uint64_t mesh_seed = 1)
        : mesh(lognormal_mesh(nx, ny, nz, 10.0, mesh_seed)),
          wells(corner_wells(mesh)),
          fluid(1e-3, 5e-3, 2.0),
          hierarchy(mesh, wells, fluid, cfg)
    {
    }
};

HierarchyConfig small_config(int levels, double beta)
{
    HierarchyConfig cfg;
    cfg.levels = levels;
    cfg.coarsening_factors = {beta};
    cfg.well_layers = 1;
    cfg.well_edge_scale = 1000;
    cfg.seed = 0;
    return cfg;
}

} // namespace

TEST_CASE("single level hierarchy has no transfers")
{
    Setup s(3, 3, 1, small_config(1, 4.0));
    CHECK(s.hierarchy.num_levels() == 1);
}

TEST_CASE("two cells aggregate to one: P sums, QP = I")
{
    Mesh mesh = uniform_mesh(2, 1, 1);
    std::vector<Well> wellv(1);
    wellv[0].name = "datum";
    wellv[0].control = WellControl::Bhp;
    wellv[0].target = 1e6;
    wellv[0].perforations = {{0, 1e-12, 0.1}};
    WellSet wells(std::move(wellv));
    FluidModel fluid(1e-3, 5e-3, 2.0);
    Hierarchy h(mesh, wells, fluid, small_config(2, 2.0));
    REQUIRE(h.num_levels() == 2);

    const LevelTransfer& tr = h.transfer(0);
    CHECK(tr.coarse.n_cells == 1);
    CHECK(tr.coarse.n_faces == 0); // the single face is interior

    // P maps the coarse cell value to both fine cells
    Vec xc = Vec::Zero(tr.coarse.total());
    xc[tr.coarse.p_r(0)] = 3.0;
    xc[tr.coarse.s(0)] = 0.25;
    Vec xf = tr.prolong(xc);
    CHECK(xf[tr.fine.p_r(0)] == 3.0);
    CHECK(xf[tr.fine.p_r(1)] == 3.0);
    CHECK(xf[tr.fine.s(0)] == 0.25);

    // QP = identity, bitwise
    Vec back = tr.project(xf);
    CHECK((back - xc).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("QP = I exactly on all blocks and levels")
{
    Setup s(8, 8, 2, small_config(3, 8.0));
    REQUIRE(s.hierarchy.num_levels() == 3);
    for (int l = 0; l + 1 < s.hierarchy.num_levels(); ++l) {
        const LevelTransfer& tr = s.hierarchy.transfer(l);
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Vec xc = random_state(tr.coarse, 40 + seed);
            const Vec diff = tr.project(tr.prolong(xc)) - xc;
            CHECK(diff.lpNorm<Eigen::Infinity>() == 0.0);
        }
    }
}

TEST_CASE("coarse level structure: wells singleton, bundles nonempty, nested")
{
    Setup s(8, 8, 2, small_config(3, 8.0));
    for (int l = 0; l + 1 < s.hierarchy.num_levels(); ++l) {
        const LevelProblem& fine = s.hierarchy.problem(l);
        const LevelProblem& coarse = s.hierarchy.problem(l + 1);
        const LevelTransfer& tr = s.hierarchy.transfer(l);

        // wells uncoarsened
        CHECK(coarse.layout.n_wells == fine.layout.n_wells);
        CHECK(coarse.wells.size() == fine.wells.size());

        // every fine cell is assigned; aggregates partition the cells
        std::set<int> used(tr.cell_agg.begin(), tr.cell_agg.end());
        CHECK(static_cast<int>(used.size()) == coarse.layout.n_cells);

        // face bundles partition the inter-aggregate fine faces
        for (int e = 0; e < fine.layout.n_faces; ++e) {
            const FaceConn& f = fine.faces[e];
            const bool interior = tr.cell_agg[f.k] == tr.cell_agg[f.l];
            CHECK((tr.face_coarse[e] < 0) == interior);
        }
        for (int cf = 0; cf < coarse.layout.n_faces; ++cf) {
            CHECK(coarse.faces[cf].pcoef >= 1.0);
            CHECK(coarse.faces[cf].inv_trans_k > 0.0);
            CHECK(coarse.faces[cf].inv_trans_l > 0.0);
        }
        for (const PerfConn& p : coarse.perfs) CHECK(p.pcoef >= 1.0);

        // aggregate pore volumes sum to the fine total
        double fine_pv = 0.0, coarse_pv = 0.0;
        for (double v : fine.pore_volume) fine_pv += v;
        for (double v : coarse.pore_volume) coarse_pv += v;
        CHECK(coarse_pv == doctest::Approx(fine_pv).epsilon(1e-13));
    }
}

TEST_CASE("Galerkin identity: stored coarse residual equals R r(P x)")
{
    Setup s(8, 8, 2, small_config(3, 6.0));
    s.hierarchy.set_time_step(250.0, Vec::Constant(s.mesh.num_cells(), 0.15));

    for (int l = 0; l + 1 < s.hierarchy.num_levels(); ++l) {
        const LevelProblem& fine = s.hierarchy.problem(l);
        const LevelProblem& coarse = s.hierarchy.problem(l + 1);
        const LevelTransfer& tr = s.hierarchy.transfer(l);

        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const Vec xc = random_state(tr.coarse, 900 + seed, 0.01, 0.99);
            const Vec direct = assemble_residual(coarse, xc);
            const Vec composed = tr.restrict_residual(assemble_residual(fine, tr.prolong(xc)));
            const double rel = (direct - composed).norm() / composed.norm();
            CHECK(rel <= 1e-12);
        }
    }
}

TEST_CASE("coarse control rows equal fine control rows")
{
    Setup s(6, 6, 1, small_config(2, 4.0));
    s.hierarchy.set_time_step(100.0, Vec::Zero(36));
    const LevelTransfer& tr = s.hierarchy.transfer(0);
    const LevelProblem& coarse = s.hierarchy.problem(1);

    const Vec xc = random_state(tr.coarse, 3);
    const Vec rc = assemble_residual(coarse, xc);

    // BHP row: p_w - target, independent of the level
    for (int w = 0; w < coarse.layout.n_wells; ++w)
        if (coarse.wells[w].control == WellControl::Bhp)
            CHECK(rc[coarse.layout.p_w(w)] ==
                  doctest::Approx(xc[coarse.layout.p_w(w)] - coarse.wells[w].target));
}

TEST_CASE("time-lag vectors restrict by aggregate sums")
{
    Setup s(6, 6, 1, small_config(2, 4.0));
    Vec s_prev = Vec::LinSpaced(36, 0.0, 1.0);
    s.hierarchy.set_time_step(123.0, s_prev);

    const LevelProblem& fine = s.hierarchy.problem(0);
    const LevelProblem& coarse = s.hierarchy.problem(1);
    const LevelTransfer& tr = s.hierarchy.transfer(0);

    Vec expect = Vec::Zero(coarse.layout.n_cells);
    for (int c = 0; c < fine.layout.n_cells; ++c)
        expect[tr.cell_agg[c]] += fine.pore_volume[c] / 123.0 * s_prev[c];
    CHECK((coarse.time_lag - expect).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("well perforations interior to aggregates after well-aware merging")
{
    Setup s(8, 8, 3, small_config(2, 16.0));
    const LevelTransfer& tr = s.hierarchy.transfer(0);
    const LevelProblem& fine = s.hierarchy.problem(0);

    auto adj = s.mesh.cell_graph().adjacency();
    for (const PerfConn& p : fine.perfs) {
        const int agg = tr.cell_agg[p.cell];
        for (int i = adj.offsets[p.cell]; i < adj.offsets[p.cell + 1]; ++i)
            CHECK(tr.cell_agg[adj.neighbors[i]] == agg);
    }
}

TEST_CASE("per-level coarsening factors, four levels")
{
    Mesh mesh = lognormal_mesh(12, 12, 2, 10.0, 9);
    WellSet wells = corner_wells(mesh);
    FluidModel fluid(1e-3, 5e-3, 2.0);
    HierarchyConfig cfg;
    cfg.levels = 4;
    cfg.coarsening_factors = {8.0, 4.0}; // last factor repeats
    cfg.well_layers = 1;
    cfg.well_edge_scale = 100;
    Hierarchy h(mesh, wells, fluid, cfg);
    REQUIRE(h.num_levels() >= 3);

    auto sizes = h.level_sizes();
    CHECK(sizes[0] == 288);
    for (std::size_t l = 1; l < sizes.size(); ++l) CHECK(sizes[l] < sizes[l - 1]);

    h.set_time_step(500.0, Vec::Constant(288, 0.2));
    for (int l = 0; l + 1 < h.num_levels(); ++l) {
        const LevelTransfer& tr = h.transfer(l);
        const Vec xc = random_state(tr.coarse, 70 + l, 0.01, 0.99);
        const Vec direct = assemble_residual(h.problem(l + 1), xc);
        const Vec composed =
            tr.restrict_residual(assemble_residual(h.problem(l), tr.prolong(xc)));
        CHECK((direct - composed).norm() <= 1e-12 * composed.norm());
        const Vec round_trip = tr.project(tr.prolong(xc));
        CHECK((round_trip - xc).lpNorm<Eigen::Infinity>() == 0.0);
    }
}

TEST_CASE("hierarchy config validation")
{
    Mesh mesh = uniform_mesh(2, 2, 1);
    WellSet wells = corner_wells(mesh);
    FluidModel fluid(1e-3, 5e-3, 2.0);
    HierarchyConfig bad;
    bad.levels = 0;
    CHECK_THROWS(Hierarchy(mesh, wells, fluid, bad));
    bad.levels = 2;
    bad.coarsening_factors = {1.5};
    CHECK_THROWS(Hierarchy(mesh, wells, fluid, bad));
}
