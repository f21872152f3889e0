#include "fasflow/hierarchy.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace fasflow {

Vec LevelTransfer::prolong(const Vec& coarse_x) const
{
    if (coarse_x.size() != coarse.total())
        throw std::invalid_argument("prolong: coarse state size mismatch");
    Vec x = Vec::Zero(fine.total());
    for (int e = 0; e < fine.n_faces; ++e)
        if (face_coarse[e] >= 0)
            x[fine.sigma_r(e)] = face_sign[e] * face_weight[e] *
                                 coarse_x[coarse.sigma_r(face_coarse[e])];
    for (int p = 0; p < fine.n_perfs; ++p)
        x[fine.sigma_w(p)] = perf_weight[p] * coarse_x[coarse.sigma_w(perf_coarse[p])];
    for (int c = 0; c < fine.n_cells; ++c) {
        x[fine.p_r(c)] = coarse_x[coarse.p_r(cell_agg[c])];
        x[fine.s(c)] = coarse_x[coarse.s(cell_agg[c])];
    }
    for (int w = 0; w < fine.n_wells; ++w)
        x[fine.p_w(w)] = coarse_x[coarse.p_w(w)];
    return x;
}

Vec LevelTransfer::restrict_residual(const Vec& fine_r) const
{
    if (fine_r.size() != fine.total())
        throw std::invalid_argument("restrict: fine residual size mismatch");
    Vec r = Vec::Zero(coarse.total());
    for (int e = 0; e < fine.n_faces; ++e)
        if (face_coarse[e] >= 0)
            r[coarse.sigma_r(face_coarse[e])] +=
                face_sign[e] * face_weight[e] * fine_r[fine.sigma_r(e)];
    for (int p = 0; p < fine.n_perfs; ++p)
        r[coarse.sigma_w(perf_coarse[p])] += perf_weight[p] * fine_r[fine.sigma_w(p)];
    for (int c = 0; c < fine.n_cells; ++c) {
        r[coarse.p_r(cell_agg[c])] += fine_r[fine.p_r(c)];
        r[coarse.s(cell_agg[c])] += fine_r[fine.s(c)];
    }
    for (int w = 0; w < fine.n_wells; ++w)
        r[coarse.p_w(w)] += fine_r[fine.p_w(w)];
    return r;
}

Vec LevelTransfer::project(const Vec& fine_x) const
{
    if (fine_x.size() != fine.total())
        throw std::invalid_argument("project: fine state size mismatch");
    Vec x(coarse.total());
    // Fluxes: signed selection of the bundle representative, whose
    // interpolation weight is exactly one. Pressures and saturations:
    // weighted averages in deviation form around a representative; on an
    // interpolated vector every deviation term vanishes identically, so the
    // projection inverts the interpolation bitwise.
    for (int f = 0; f < coarse.n_faces; ++f) {
        const int rep = rep_face[f];
        x[coarse.sigma_r(f)] = face_sign[rep] * fine_x[fine.sigma_r(rep)];
    }
    for (int p = 0; p < coarse.n_perfs; ++p)
        x[coarse.sigma_w(p)] = fine_x[fine.sigma_w(rep_perf[p])];
    for (int a = 0; a < coarse.n_cells; ++a) {
        x[coarse.p_r(a)] = fine_x[fine.p_r(rep_cell[a])];
        x[coarse.s(a)] = fine_x[fine.s(rep_cell[a])];
    }
    for (int c = 0; c < fine.n_cells; ++c) {
        const int a = cell_agg[c];
        x[coarse.p_r(a)] += cell_volume_weight[c] *
                            (fine_x[fine.p_r(c)] - fine_x[fine.p_r(rep_cell[a])]);
        x[coarse.s(a)] += cell_pv_weight[c] *
                          (fine_x[fine.s(c)] - fine_x[fine.s(rep_cell[a])]);
    }
    for (int w = 0; w < fine.n_wells; ++w)
        x[coarse.p_w(w)] = fine_x[fine.p_w(w)];
    return x;
}

Vec LevelTransfer::restrict_cells(const Vec& fine_cells) const
{
    Vec out = Vec::Zero(coarse.n_cells);
    for (int c = 0; c < fine.n_cells; ++c) out[cell_agg[c]] += fine_cells[c];
    return out;
}

ConnectivityGraph level_cell_graph(const LevelProblem& prob)
{
    ConnectivityGraph g;
    g.num_vertices = prob.layout.n_cells;
    std::map<std::pair<int, int>, std::int64_t> weights;
    for (const FaceConn& f : prob.faces)
        weights[{std::min(f.k, f.l), std::max(f.k, f.l)}] +=
            static_cast<std::int64_t>(std::llround(f.pcoef));
    for (auto& [key, w] : weights)
        g.edges.push_back({key.first, key.second, std::max<std::int64_t>(w, 1)});
    return g;
}

std::pair<LevelProblem, LevelTransfer> coarsen_level(const LevelProblem& fine,
                                                     const Partition& part)
{
    if (static_cast<int>(part.assignment.size()) != fine.layout.n_cells)
        throw std::invalid_argument("coarsen_level: partition size mismatch");

    LevelProblem coarse;
    LevelTransfer tr;
    tr.fine = fine.layout;
    tr.cell_agg = part.assignment;

    const int na = part.num_aggregates;
    coarse.fluid = fine.fluid;
    coarse.dt = fine.dt;
    coarse.wells = fine.wells;
    coarse.pore_volume.assign(na, 0.0);
    coarse.cell_volume.assign(na, 0.0);
    for (int c = 0; c < fine.layout.n_cells; ++c) {
        coarse.pore_volume[part.assignment[c]] += fine.pore_volume[c];
        coarse.cell_volume[part.assignment[c]] += fine.cell_volume[c];
    }
    tr.rep_cell.assign(na, -1);
    for (int c = 0; c < fine.layout.n_cells; ++c)
        if (tr.rep_cell[part.assignment[c]] < 0) tr.rep_cell[part.assignment[c]] = c;

    // Face bundles keyed by aggregate pair (A < B). The coarse flux dof is
    // the flux of the bundle's highest-transmissibility face; interpolation
    // distributes it by transmissibility ratios so that the Galerkin coarse
    // face behaves like the parallel combination of its members. The
    // geometric face transmissibility at any level is pcoef/(invT_k+invT_l).
    tr.face_coarse.assign(fine.layout.n_faces, -1);
    tr.face_sign.assign(fine.layout.n_faces, 0.0);
    tr.face_weight.assign(fine.layout.n_faces, 0.0);
    std::map<std::pair<int, int>, int> face_id;
    auto face_trans = [&](int e) {
        const FaceConn& f = fine.faces[e];
        return f.pcoef / (f.inv_trans_k + f.inv_trans_l);
    };
    for (int e = 0; e < fine.layout.n_faces; ++e) {
        const FaceConn& f = fine.faces[e];
        const int ak = part.assignment[f.k];
        const int al = part.assignment[f.l];
        if (ak == al) continue; // interior to an aggregate
        const int a = std::min(ak, al);
        const int b = std::max(ak, al);
        auto [it, fresh] = face_id.insert({{a, b}, static_cast<int>(coarse.faces.size())});
        if (fresh) {
            coarse.faces.push_back({a, b, 0.0, 0.0, 0.0});
            tr.rep_face.push_back(e);
        } else if (face_trans(e) > face_trans(tr.rep_face[it->second])) {
            tr.rep_face[it->second] = e;
        }
        tr.face_coarse[e] = it->second;
        tr.face_sign[e] = (ak == a) ? 1.0 : -1.0;
    }
    for (int e = 0; e < fine.layout.n_faces; ++e) {
        const int cf_id = tr.face_coarse[e];
        if (cf_id < 0) continue;
        const FaceConn& f = fine.faces[e];
        FaceConn& cf = coarse.faces[cf_id];
        const double ratio =
            e == tr.rep_face[cf_id] ? 1.0 : face_trans(e) / face_trans(tr.rep_face[cf_id]);
        tr.face_weight[e] = ratio;
        if (tr.face_sign[e] > 0.0) {
            cf.inv_trans_k += ratio * ratio * f.inv_trans_k;
            cf.inv_trans_l += ratio * ratio * f.inv_trans_l;
        } else {
            cf.inv_trans_k += ratio * ratio * f.inv_trans_l;
            cf.inv_trans_l += ratio * ratio * f.inv_trans_k;
        }
        cf.pcoef += ratio * f.pcoef;
    }

    // perforation bundles keyed by (well, aggregate); same ratio construction
    // with the per-perforation transmissibility pcoef/inv_wi
    tr.perf_coarse.assign(fine.layout.n_perfs, -1);
    tr.perf_weight.assign(fine.layout.n_perfs, 0.0);
    std::map<std::pair<int, int>, int> perf_id;
    auto perf_trans = [&](int q) {
        return fine.perfs[q].pcoef / fine.perfs[q].inv_wi;
    };
    for (int p = 0; p < fine.layout.n_perfs; ++p) {
        const PerfConn& pf = fine.perfs[p];
        const int a = part.assignment[pf.cell];
        auto [it, fresh] =
            perf_id.insert({{pf.well, a}, static_cast<int>(coarse.perfs.size())});
        if (fresh) {
            coarse.perfs.push_back({a, pf.well, 0.0, 0.0});
            tr.rep_perf.push_back(p);
        } else if (perf_trans(p) > perf_trans(tr.rep_perf[it->second])) {
            tr.rep_perf[it->second] = p;
        }
        tr.perf_coarse[p] = it->second;
    }
    for (int p = 0; p < fine.layout.n_perfs; ++p) {
        const int cp = tr.perf_coarse[p];
        const double ratio =
            p == tr.rep_perf[cp] ? 1.0 : perf_trans(p) / perf_trans(tr.rep_perf[cp]);
        tr.perf_weight[p] = ratio;
        coarse.perfs[cp].inv_wi += ratio * ratio * fine.perfs[p].inv_wi;
        coarse.perfs[cp].pcoef += ratio * fine.perfs[p].pcoef;
    }

    coarse.well_perfs.assign(coarse.wells.size(), {});
    for (int p = 0; p < static_cast<int>(coarse.perfs.size()); ++p)
        coarse.well_perfs[coarse.perfs[p].well].push_back(p);

    // projection weights for the cell blocks
    tr.cell_volume_weight.resize(fine.layout.n_cells);
    tr.cell_pv_weight.resize(fine.layout.n_cells);
    for (int c = 0; c < fine.layout.n_cells; ++c) {
        const int a = part.assignment[c];
        tr.cell_volume_weight[c] = fine.cell_volume[c] / coarse.cell_volume[a];
        tr.cell_pv_weight[c] = fine.pore_volume[c] / coarse.pore_volume[a];
    }

    coarse.layout.n_faces = static_cast<int>(coarse.faces.size());
    coarse.layout.n_perfs = static_cast<int>(coarse.perfs.size());
    coarse.layout.n_cells = na;
    coarse.layout.n_wells = static_cast<int>(coarse.wells.size());
    coarse.time_lag = Vec::Zero(na);

    tr.coarse = coarse.layout;
    return {std::move(coarse), std::move(tr)};
}

Hierarchy::Hierarchy(const Mesh& mesh, const WellSet& wells, const FluidModel& fluid,
                     const HierarchyConfig& config)
{
    if (config.levels < 1)
        throw std::invalid_argument("Hierarchy: need at least one level");
    for (double beta : config.coarsening_factors)
        if (beta < 2.0)
            throw std::invalid_argument("Hierarchy: coarsening factor must be >= 2");
    if (config.coarsening_factors.empty())
        throw std::invalid_argument("Hierarchy: no coarsening factor given");

    problems_.push_back(build_fine_problem(mesh, wells, fluid));
    problems_.back().validate();

    for (int l = 0; l + 1 < config.levels; ++l) {
        const LevelProblem& fine = problems_.back();
        if (fine.layout.n_cells <= 1) break;
        const double beta =
            config.coarsening_factors[std::min<std::size_t>(l, config.coarsening_factors.size() - 1)];
        const int k = std::max(1, static_cast<int>(std::ceil(fine.layout.n_cells / beta)));

        std::vector<std::vector<int>> well_cells(fine.wells.size());
        for (const PerfConn& p : fine.perfs) well_cells[p.well].push_back(p.cell);
        for (auto& wc : well_cells) {
            std::sort(wc.begin(), wc.end());
            wc.erase(std::unique(wc.begin(), wc.end()), wc.end());
        }

        Partition part =
            well_aware_partition(level_cell_graph(fine), well_cells, config.well_layers,
                                 config.well_edge_scale, k, config.seed + l);
        if (part.num_aggregates >= fine.layout.n_cells) break; // no progress
        auto [coarse, tr] = coarsen_level(fine, part);
        coarse.validate();
        problems_.push_back(std::move(coarse));
        transfers_.push_back(std::move(tr));
    }
}

std::vector<int> Hierarchy::level_sizes() const
{
    std::vector<int> sizes;
    for (const LevelProblem& p : problems_) sizes.push_back(p.layout.n_cells);
    return sizes;
}

void Hierarchy::set_time_step(double dt, const Vec& s_prev_fine)
{
    problems_[0].set_fine_time_step(dt, s_prev_fine);
    for (int l = 0; l + 1 < num_levels(); ++l) {
        problems_[l + 1].dt = dt;
        problems_[l + 1].time_lag = transfers_[l].restrict_cells(problems_[l].time_lag);
    }
}

} // namespace fasflow
