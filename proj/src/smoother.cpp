#include "fasflow/smoother.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fasflow {

void chop_saturations(const BlockLayout& layout, Vec& x)
{
    for (int c = 0; c < layout.n_cells; ++c)
        x[layout.s(c)] = std::min(1.0, std::max(0.0, x[layout.s(c)]));
}

namespace {

/// Primal reduction: the sigma-sigma sub-block is diagonal, so each flux
/// unknown is eliminated locally against its own equation, leaving a system
/// in (p_r, p_w, s). The reduced matrix is assembled directly from the
/// connection data; eliminating a connection's flux couples only the
/// unknowns appearing in its flux equation.
UpdateResult primal_update(const LevelProblem& prob, const Vec& x, const Vec& b,
                           const SmootherOptions& opts, Vec& dx)
{
    UpdateResult res;
    const BlockLayout& lo = prob.layout;
    const int nf = lo.n_faces + lo.n_perfs; // flux unknowns
    const int ncc = lo.total() - nf;        // p_r, p_w, s
    const FluidModel& fluid = *prob.fluid;

    const Vec r = assemble_residual(prob, x) - b;

    // reduced indices
    auto ip = [&](int c) { return c; };
    auto iw = [&](int w) { return lo.n_cells + w; };
    auto is = [&](int c) { return lo.n_cells + lo.n_wells + c; };

    std::vector<Triplet> t;
    t.reserve(16 * lo.n_faces + 12 * lo.n_perfs + 2 * lo.n_cells);
    Vec rhs(ncc);
    Vec flux_rhs(nf); // sigma = (flux_rhs - sum couplings) / m per connection
    Vec flux_m(nf);

    for (int c = 0; c < lo.n_cells; ++c) {
        t.emplace_back(is(c), is(c), prob.pore_volume[c] / prob.dt);
        rhs[ip(c)] = -r[lo.p_r(c)];
        rhs[is(c)] = -r[lo.s(c)];
    }
    for (int w = 0; w < lo.n_wells; ++w) rhs[iw(w)] = -r[lo.p_w(w)];

    for (int e = 0; e < lo.n_faces; ++e) {
        const FaceConn& f = prob.faces[e];
        const double sk = x[lo.s(f.k)];
        const double sl = x[lo.s(f.l)];
        const double lam_k = fluid.total_mobility(sk);
        const double lam_l = fluid.total_mobility(sl);
        const double m = f.inv_trans_k / lam_k + f.inv_trans_l / lam_l;
        const double sigma = x[lo.sigma_r(e)];
        const double a_k =
            -sigma * f.inv_trans_k * fluid.total_mobility_deriv(sk) / (lam_k * lam_k);
        const double a_l =
            -sigma * f.inv_trans_l * fluid.total_mobility_deriv(sl) / (lam_l * lam_l);
        const double g = -r[lo.sigma_r(e)];
        flux_m[e] = m;
        flux_rhs[e] = g;
        const int up = sigma > 0.0 ? f.k : f.l;
        const double fw = fluid.fractional_flow(x[lo.s(up)]);
        const double dfw = fluid.fractional_flow_deriv(x[lo.s(up)]);

        // d sigma = (g + pi dp_k - pi dp_l - a_k ds_k - a_l ds_l) / m enters
        // the two conservation rows (+- pi) and the two transport rows
        // (+- pi f_up); the transport rows also keep their direct s terms.
        const double pi_m = f.pcoef / m;
        struct RowRef
        {
            int row;
            double coef;
        };
        const RowRef rows[4] = {{ip(f.k), f.pcoef * pi_m},
                                {ip(f.l), -f.pcoef * pi_m},
                                {is(f.k), f.pcoef * fw * pi_m},
                                {is(f.l), -f.pcoef * fw * pi_m}};
        for (const RowRef& rr : rows) {
            // coef multiplies (dp_k - dp_l - (a_k ds_k + a_l ds_l)/pi ... )
            t.emplace_back(rr.row, ip(f.k), rr.coef);
            t.emplace_back(rr.row, ip(f.l), -rr.coef);
            t.emplace_back(rr.row, is(f.k), -rr.coef * a_k / f.pcoef);
            t.emplace_back(rr.row, is(f.l), -rr.coef * a_l / f.pcoef);
            rhs[rr.row] -= rr.coef * g / f.pcoef;
        }
        t.emplace_back(is(f.k), is(up), f.pcoef * sigma * dfw);
        t.emplace_back(is(f.l), is(up), -f.pcoef * sigma * dfw);
    }

    for (int p = 0; p < lo.n_perfs; ++p) {
        const PerfConn& pf = prob.perfs[p];
        const double sc = x[lo.s(pf.cell)];
        const double lam = fluid.total_mobility(sc);
        const double m = pf.inv_wi / lam;
        const double sigma = x[lo.sigma_w(p)];
        const double a_c =
            -sigma * pf.inv_wi * fluid.total_mobility_deriv(sc) / (lam * lam);
        const double g = -r[lo.sigma_w(p)];
        flux_m[lo.n_faces + p] = m;
        flux_rhs[lo.n_faces + p] = g;
        const bool producer = prob.wells[pf.well].control == WellControl::Bhp;
        const double fw = producer ? fluid.fractional_flow(sc) : 1.0;

        // d sigma = (g + pi dp_c - pi dp_w - a_c ds_c) / m
        const double pi_m = pf.pcoef / m;
        struct RowRef
        {
            int row;
            double coef;
        };
        std::vector<RowRef> rows = {{ip(pf.cell), pf.pcoef * pi_m},
                                    {is(pf.cell), pf.pcoef * fw * pi_m}};
        if (prob.wells[pf.well].control == WellControl::Rate)
            rows.push_back({iw(pf.well), -pf.pcoef * pi_m});
        for (const RowRef& rr : rows) {
            t.emplace_back(rr.row, ip(pf.cell), rr.coef);
            t.emplace_back(rr.row, iw(pf.well), -rr.coef);
            t.emplace_back(rr.row, is(pf.cell), -rr.coef * a_c / pf.pcoef);
            rhs[rr.row] -= rr.coef * g / pf.pcoef;
        }
        if (producer)
            t.emplace_back(is(pf.cell), is(pf.cell),
                           pf.pcoef * sigma * fluid.fractional_flow_deriv(sc));
    }

    for (int w = 0; w < lo.n_wells; ++w)
        if (prob.wells[w].control == WellControl::Bhp)
            t.emplace_back(iw(w), iw(w), 1.0);

    BlockSystem sys;
    sys.A.resize(ncc, ncc);
    sys.A.setFromTriplets(t.begin(), t.end());
    sys.rhs = std::move(rhs);
    sys.pressure_size = lo.n_cells + lo.n_wells;

    Vec y;
    LinearReport rep = solve(sys, y, opts.linear);
    res.linear_iterations = rep.iterations;
    if (!rep.ok) {
        res.message = "primal linear solve failed: " + rep.message;
        return res;
    }

    // back substitution of the flux unknowns
    dx.resize(lo.total());
    for (int e = 0; e < lo.n_faces; ++e) {
        const FaceConn& f = prob.faces[e];
        const double sk = x[lo.s(f.k)];
        const double sl = x[lo.s(f.l)];
        const double lam_k = fluid.total_mobility(sk);
        const double lam_l = fluid.total_mobility(sl);
        const double sigma = x[lo.sigma_r(e)];
        const double a_k =
            -sigma * f.inv_trans_k * fluid.total_mobility_deriv(sk) / (lam_k * lam_k);
        const double a_l =
            -sigma * f.inv_trans_l * fluid.total_mobility_deriv(sl) / (lam_l * lam_l);
        dx[lo.sigma_r(e)] = (flux_rhs[e] + f.pcoef * (y[ip(f.k)] - y[ip(f.l)]) -
                             a_k * y[is(f.k)] - a_l * y[is(f.l)]) /
                            flux_m[e];
    }
    for (int p = 0; p < lo.n_perfs; ++p) {
        const PerfConn& pf = prob.perfs[p];
        const double sc = x[lo.s(pf.cell)];
        const double lam = fluid.total_mobility(sc);
        const double sigma = x[lo.sigma_w(p)];
        const double a_c =
            -sigma * pf.inv_wi * fluid.total_mobility_deriv(sc) / (lam * lam);
        dx[lo.sigma_w(p)] =
            (flux_rhs[lo.n_faces + p] +
             pf.pcoef * (y[ip(pf.cell)] - y[iw(pf.well)]) - a_c * y[is(pf.cell)]) /
            flux_m[lo.n_faces + p];
    }
    for (int c = 0; c < lo.n_cells; ++c) {
        dx[lo.p_r(c)] = y[ip(c)];
        dx[lo.s(c)] = y[is(c)];
    }
    for (int w = 0; w < lo.n_wells; ++w) dx[lo.p_w(w)] = y[iw(w)];

    res.ok = true;
    return res;
}

/// Hybridized coarse update. Every face flux is duplicated into two
/// one-sided copies and every perforation flux into a well-side and a
/// reservoir-side copy with an alpha/(1-alpha) weight split; continuity is
/// enforced by Lagrange multipliers. The leading blocks become local
/// (per-cell / per-well) invertible matrices, and elimination leaves a
/// global system in the multipliers and the saturations.
class HybridSystem
{
public:
    HybridSystem(const LevelProblem& prob, double alpha) : prob_(prob), alpha_(alpha)
    {
        const BlockLayout& lo = prob.layout;
        ny_ = 2 * lo.n_faces + 2 * lo.n_perfs + lo.n_cells + lo.n_wells;
        nz_ = lo.n_faces + lo.n_perfs + lo.n_cells;

        cell_faces_.resize(lo.n_cells);
        for (int e = 0; e < lo.n_faces; ++e) {
            cell_faces_[prob.faces[e].k].push_back({e, +1});
            cell_faces_[prob.faces[e].l].push_back({e, -1});
        }
        cell_perfs_.resize(lo.n_cells);
        for (int p = 0; p < lo.n_perfs; ++p)
            cell_perfs_[prob.perfs[p].cell].push_back(p);
    }

    // y ordering: face copies (K: 2e, L: 2e+1), perf copies (well: base+2p,
    // reservoir: base+2p+1), then p_r, then p_w.
    int y_face(int e, bool k_side) const { return 2 * e + (k_side ? 0 : 1); }
    int y_perf(int p, bool well_side) const
    {
        return 2 * prob_.layout.n_faces + 2 * p + (well_side ? 0 : 1);
    }
    int y_pr(int c) const { return 2 * prob_.layout.n_faces + 2 * prob_.layout.n_perfs + c; }
    int y_pw(int w) const { return y_pr(prob_.layout.n_cells) + w; }

    // z ordering: lambda per face, lambda per perforation, then saturations.
    int z_face(int e) const { return e; }
    int z_perf(int p) const { return prob_.layout.n_faces + p; }
    int z_s(int c) const { return prob_.layout.n_faces + prob_.layout.n_perfs + c; }

    UpdateResult solve_update(const Vec& x, const Vec& b, const SmootherOptions& opts,
                              Vec& dx);

private:
    struct FaceRef
    {
        int face;
        int sign;
    };
    const LevelProblem& prob_;
    double alpha_;
    int ny_ = 0;
    int nz_ = 0;
    std::vector<std::vector<FaceRef>> cell_faces_;
    std::vector<std::vector<int>> cell_perfs_;
};

UpdateResult HybridSystem::solve_update(const Vec& x, const Vec& b,
                                        const SmootherOptions& opts, Vec& dx)
{
    UpdateResult res;
    const BlockLayout& lo = prob_.layout;
    const FluidModel& fluid = *prob_.fluid;
    const Vec r = assemble_residual(prob_, x) - b;

    // Per-connection linearization data.
    struct FaceLin
    {
        double mk, ml, dmk, dml; // one-sided weights and d/ds
        double rhs_k, rhs_l;     // split right-hand sides
    };
    std::vector<FaceLin> faces(lo.n_faces);
    for (int e = 0; e < lo.n_faces; ++e) {
        const FaceConn& f = prob_.faces[e];
        const double sk = x[lo.s(f.k)], sl = x[lo.s(f.l)];
        const double lk = fluid.total_mobility(sk), ll = fluid.total_mobility(sl);
        FaceLin& fl = faces[e];
        fl.mk = f.inv_trans_k / lk;
        fl.ml = f.inv_trans_l / ll;
        fl.dmk = -f.inv_trans_k * fluid.total_mobility_deriv(sk) / (lk * lk);
        fl.dml = -f.inv_trans_l * fluid.total_mobility_deriv(sl) / (ll * ll);
        const double sigma = x[lo.sigma_r(e)];
        // any split summing to the full row residual yields the same update
        const double r_k = fl.mk * sigma - f.pcoef * x[lo.p_r(f.k)];
        const double r_l = fl.ml * sigma + f.pcoef * x[lo.p_r(f.l)];
        const double extra = r[lo.sigma_r(e)] - (r_k + r_l); // b and roundoff
        fl.rhs_k = -(r_k + extra);
        fl.rhs_l = -r_l;
    }
    struct PerfLin
    {
        double mw, mc, dmw, dmc;
        double rhs_w, rhs_c;
    };
    std::vector<PerfLin> perfs(lo.n_perfs);
    for (int p = 0; p < lo.n_perfs; ++p) {
        const PerfConn& pf = prob_.perfs[p];
        const double sc = x[lo.s(pf.cell)];
        const double lam = fluid.total_mobility(sc);
        const double m = pf.inv_wi / lam;
        const double dm = -pf.inv_wi * fluid.total_mobility_deriv(sc) / (lam * lam);
        PerfLin& pl = perfs[p];
        pl.mw = alpha_ * m;
        pl.mc = (1.0 - alpha_) * m;
        pl.dmw = alpha_ * dm;
        pl.dmc = (1.0 - alpha_) * dm;
        const double sigma = x[lo.sigma_w(p)];
        const double r_w = pl.mw * sigma + pf.pcoef * x[lo.p_w(pf.well)];
        const double r_c = pl.mc * sigma - pf.pcoef * x[lo.p_r(pf.cell)];
        const double extra = r[lo.sigma_w(p)] - (r_w + r_c);
        pl.rhs_w = -(r_w + extra);
        pl.rhs_c = -r_c;
    }

    // Assemble the z-side rows (continuity rows carry no z-z entries; the
    // saturation rows keep A_ss) and the coupling triplets.
    std::vector<Triplet> t_zz, t_zy, t_yz;
    Vec rhs_z = Vec::Zero(nz_);
    Vec rhs_y = Vec::Zero(ny_);

    for (int e = 0; e < lo.n_faces; ++e) {
        t_zy.emplace_back(z_face(e), y_face(e, true), 1.0);
        t_zy.emplace_back(z_face(e), y_face(e, false), -1.0);
        // rhs stays zero: both copies currently equal sigma_e
    }
    for (int p = 0; p < lo.n_perfs; ++p) {
        t_zy.emplace_back(z_perf(p), y_perf(p, true), 1.0);
        t_zy.emplace_back(z_perf(p), y_perf(p, false), -1.0);
    }
    for (int c = 0; c < lo.n_cells; ++c) {
        t_zz.emplace_back(z_s(c), z_s(c), prob_.pore_volume[c] / prob_.dt);
        rhs_z[z_s(c)] = -r[lo.s(c)];
    }
    for (int e = 0; e < lo.n_faces; ++e) {
        const FaceConn& f = prob_.faces[e];
        const double sigma = x[lo.sigma_r(e)];
        const int up = sigma > 0.0 ? f.k : f.l;
        const double fw = fluid.fractional_flow(x[lo.s(up)]);
        const double dfw = fluid.fractional_flow_deriv(x[lo.s(up)]);
        t_zy.emplace_back(z_s(f.k), y_face(e, true), f.pcoef * fw);
        t_zy.emplace_back(z_s(f.l), y_face(e, false), -f.pcoef * fw);
        t_zz.emplace_back(z_s(f.k), z_s(up), f.pcoef * sigma * dfw);
        t_zz.emplace_back(z_s(f.l), z_s(up), -f.pcoef * sigma * dfw);
    }
    for (int p = 0; p < lo.n_perfs; ++p) {
        const PerfConn& pf = prob_.perfs[p];
        const double sigma = x[lo.sigma_w(p)];
        const bool producer = prob_.wells[pf.well].control == WellControl::Bhp;
        const double fw = producer ? fluid.fractional_flow(x[lo.s(pf.cell)]) : 1.0;
        t_zy.emplace_back(z_s(pf.cell), y_perf(p, false), pf.pcoef * fw);
        if (producer)
            t_zz.emplace_back(z_s(pf.cell), z_s(pf.cell),
                              pf.pcoef * sigma * fluid.fractional_flow_deriv(x[lo.s(pf.cell)]));
    }

    // y-side equations, grouped into local blocks.
    // Row numbering matches the y unknown numbering: the flux-copy rows take
    // the copy's slot, the conservation row takes p_r's slot, the control
    // row takes p_w's slot.
    for (int e = 0; e < lo.n_faces; ++e) {
        const FaceConn& f = prob_.faces[e];
        const FaceLin& fl = faces[e];
        const double sigma = x[lo.sigma_r(e)];
        // K side
        t_yz.emplace_back(y_face(e, true), z_face(e), f.pcoef);
        t_yz.emplace_back(y_face(e, true), z_s(f.k), fl.dmk * sigma);
        rhs_y[y_face(e, true)] = fl.rhs_k;
        // L side
        t_yz.emplace_back(y_face(e, false), z_face(e), -f.pcoef);
        t_yz.emplace_back(y_face(e, false), z_s(f.l), fl.dml * sigma);
        rhs_y[y_face(e, false)] = fl.rhs_l;
    }
    for (int p = 0; p < lo.n_perfs; ++p) {
        const PerfConn& pf = prob_.perfs[p];
        const PerfLin& pl = perfs[p];
        t_yz.emplace_back(y_perf(p, true), z_perf(p), -pf.pcoef);
        t_yz.emplace_back(y_perf(p, true), z_s(pf.cell), pl.dmw * x[lo.sigma_w(p)]);
        rhs_y[y_perf(p, true)] = pl.rhs_w;
        t_yz.emplace_back(y_perf(p, false), z_perf(p), pf.pcoef);
        t_yz.emplace_back(y_perf(p, false), z_s(pf.cell), pl.dmc * x[lo.sigma_w(p)]);
        rhs_y[y_perf(p, false)] = pl.rhs_c;
    }
    for (int c = 0; c < lo.n_cells; ++c) rhs_y[y_pr(c)] = -r[lo.p_r(c)];
    for (int w = 0; w < lo.n_wells; ++w) rhs_y[y_pw(w)] = -r[lo.p_w(w)];

    SpMat a_yz(ny_, nz_), a_zy(nz_, ny_), a_zz(nz_, nz_);
    a_yz.setFromTriplets(t_yz.begin(), t_yz.end());
    a_zy.setFromTriplets(t_zy.begin(), t_zy.end());
    a_zz.setFromTriplets(t_zz.begin(), t_zz.end());
    Eigen::SparseMatrix<double, Eigen::RowMajor> a_yz_rows(a_yz);

    // Local block elimination. Block unknown/equation lists per entity.
    // Rows and columns are equilibrated before factorization: the flux
    // weights (~1/(lambda T)) and the incidence entries (~1) differ by many
    // orders of magnitude, which would otherwise defeat the rank test.
    std::vector<Triplet> t_s;
    Vec g = rhs_z;
    Vec dy = Vec::Zero(ny_); // filled during back substitution
    struct LocalBlock
    {
        Eigen::FullPivLU<Eigen::MatrixXd> lu; // of the equilibrated block
        Eigen::VectorXd row_scale;
        Eigen::VectorXd col_scale;
        std::vector<int> ids;

        Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const
        {
            return col_scale.asDiagonal() *
                   lu.solve(Eigen::MatrixXd(row_scale.asDiagonal() * rhs));
        }
    };
    std::vector<LocalBlock> blocks;

    auto make_block = [&](const std::vector<int>& ids, Eigen::MatrixXd B) {
        const int nb = static_cast<int>(ids.size());
        LocalBlock blk;
        blk.ids = ids;
        blk.row_scale.resize(nb);
        blk.col_scale.resize(nb);
        for (int i = 0; i < nb; ++i) {
            const double m = B.row(i).cwiseAbs().maxCoeff();
            blk.row_scale[i] = m > 0.0 ? 1.0 / m : 1.0;
        }
        B = blk.row_scale.asDiagonal() * B;
        for (int j = 0; j < nb; ++j) {
            const double m = B.col(j).cwiseAbs().maxCoeff();
            blk.col_scale[j] = m > 0.0 ? 1.0 / m : 1.0;
        }
        B = B * blk.col_scale.asDiagonal();
        blk.lu.compute(B);
        blk.lu.setThreshold(1e-12);
        if (!blk.lu.isInvertible())
            throw std::runtime_error("hybridization: singular local block");

        // gather A_yz rows and rhs for this block
        std::vector<int> zcols;
        for (int i = 0; i < nb; ++i)
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a_yz_rows,
                                                                                ids[i]);
                 it; ++it)
                zcols.push_back(static_cast<int>(it.col()));
        std::sort(zcols.begin(), zcols.end());
        zcols.erase(std::unique(zcols.begin(), zcols.end()), zcols.end());
        Eigen::MatrixXd rhs_block(nb, zcols.size() + 1);
        rhs_block.setZero();
        for (int i = 0; i < nb; ++i) {
            for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(a_yz_rows,
                                                                                ids[i]);
                 it; ++it) {
                const auto pos = std::lower_bound(zcols.begin(), zcols.end(), it.col()) -
                                 zcols.begin();
                rhs_block(i, pos) = it.value();
            }
            rhs_block(i, zcols.size()) = rhs_y[ids[i]];
        }
        Eigen::MatrixXd sol = blk.solve(rhs_block); // B^{-1} [A_yz | rhs]
        // S -= A_zy(:, ids) * sol(:, zcols);  g -= A_zy(:, ids) * sol(:, rhs)
        for (int i = 0; i < nb; ++i) {
            for (SpMat::InnerIterator it(a_zy, ids[i]); it; ++it) {
                const int zrow = static_cast<int>(it.row());
                for (std::size_t q = 0; q < zcols.size(); ++q)
                    if (sol(i, q) != 0.0)
                        t_s.emplace_back(zrow, zcols[q], -it.value() * sol(i, q));
                g[zrow] -= it.value() * sol(i, zcols.size());
            }
        }
        blocks.push_back(std::move(blk));
    };

    for (int c = 0; c < lo.n_cells; ++c) {
        std::vector<int> ids;
        for (const FaceRef& fr : cell_faces_[c]) ids.push_back(y_face(fr.face, fr.sign > 0));
        for (int p : cell_perfs_[c]) ids.push_back(y_perf(p, false));
        ids.push_back(y_pr(c));
        const int nb = static_cast<int>(ids.size());
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nb, nb);
        int row = 0;
        for (const FaceRef& fr : cell_faces_[c]) {
            const FaceLin& fl = faces[fr.face];
            B(row, row) = fr.sign > 0 ? fl.mk : fl.ml;
            // K side: m dsig - pi (dp - dlam); L side: m dsig - pi (dlam - dp)
            B(row, nb - 1) = -fr.sign * prob_.faces[fr.face].pcoef;
            ++row;
        }
        for (int p : cell_perfs_[c]) {
            B(row, row) = perfs[p].mc;
            B(row, nb - 1) = -prob_.perfs[p].pcoef;
            ++row;
        }
        // conservation row: signed incidence over this cell's copies
        int col = 0;
        for (const FaceRef& fr : cell_faces_[c])
            B(row, col++) = fr.sign * prob_.faces[fr.face].pcoef;
        for (int p : cell_perfs_[c]) B(row, col++) = prob_.perfs[p].pcoef;
        make_block(ids, B);
    }
    for (int w = 0; w < lo.n_wells; ++w) {
        std::vector<int> ids;
        for (int p : prob_.well_perfs[w]) ids.push_back(y_perf(p, true));
        ids.push_back(y_pw(w));
        const int nb = static_cast<int>(ids.size());
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(nb, nb);
        int row = 0;
        for (int p : prob_.well_perfs[w]) {
            B(row, row) = perfs[p].mw;
            B(row, nb - 1) = prob_.perfs[p].pcoef; // d/dp_w
            ++row;
        }
        if (prob_.wells[w].control == WellControl::Bhp) {
            B(row, nb - 1) = 1.0;
        } else {
            int col = 0;
            for (int p : prob_.well_perfs[w]) B(row, col++) = -prob_.perfs[p].pcoef;
        }
        make_block(ids, B);
    }

    BlockSystem sys;
    sys.A = a_zz;
    {
        SpMat update(nz_, nz_);
        update.setFromTriplets(t_s.begin(), t_s.end());
        sys.A = a_zz + update;
    }
    sys.rhs = g;
    sys.pressure_size = lo.n_faces + lo.n_perfs;

    Vec dz;
    LinearReport rep = solve(sys, dz, opts.linear);
    res.linear_iterations = rep.iterations;
    if (!rep.ok) {
        res.message = "hybrid linear solve failed: " + rep.message;
        return res;
    }

    // back substitution: dy = B^{-1} (rhs_y - A_yz dz) per block
    Vec yz_dz = a_yz * dz;
    for (const LocalBlock& blk : blocks) {
        Eigen::MatrixXd loc(blk.ids.size(), 1);
        for (std::size_t i = 0; i < blk.ids.size(); ++i)
            loc(i, 0) = rhs_y[blk.ids[i]] - yz_dz[blk.ids[i]];
        const Eigen::MatrixXd sol = blk.solve(loc);
        for (std::size_t i = 0; i < blk.ids.size(); ++i) dy[blk.ids[i]] = sol(i, 0);
    }

    dx.resize(lo.total());
    double cont = 0.0;
    for (int e = 0; e < lo.n_faces; ++e) {
        dx[lo.sigma_r(e)] = dy[y_face(e, true)];
        cont = std::max(cont, std::abs(dy[y_face(e, true)] - dy[y_face(e, false)]));
    }
    for (int p = 0; p < lo.n_perfs; ++p) {
        dx[lo.sigma_w(p)] = dy[y_perf(p, true)];
        cont = std::max(cont, std::abs(dy[y_perf(p, true)] - dy[y_perf(p, false)]));
    }
    for (int c = 0; c < lo.n_cells; ++c) dx[lo.p_r(c)] = dy[y_pr(c)];
    for (int w = 0; w < lo.n_wells; ++w) dx[lo.p_w(w)] = dy[y_pw(w)];
    for (int c = 0; c < lo.n_cells; ++c) dx[lo.s(c)] = dz[z_s(c)];

    res.continuity_error = cont;
    res.ok = true;
    return res;
}

} // namespace

UpdateResult newton_update(const LevelProblem& prob, const Vec& x, const Vec& b,
                           Reduction reduction, const SmootherOptions& opts, Vec& dx)
{
    if (reduction == Reduction::Primal) return primal_update(prob, x, b, opts, dx);
    HybridSystem hybrid(prob, opts.alpha_split);
    return hybrid.solve_update(x, b, opts, dx);
}

SmoothResult newton_smooth(const LevelProblem& prob, Vec& x, const Vec& b,
                           Reduction reduction, const SmootherOptions& opts,
                           const SmoothParams& params)
{
    SmoothResult res;
    const ResidualScales scales = make_residual_scales(prob);
    for (int step = 0; step < params.max_steps; ++step) {
        if (params.stop_tol > 0.0) {
            res.scaled_residual =
                scaled_norm(prob, scales, assemble_residual(prob, x) - b);
            if (res.scaled_residual <= params.stop_tol) {
                res.ok = true;
                return res;
            }
        }
        Vec dx;
        UpdateResult up = newton_update(prob, x, b, reduction, opts, dx);
        res.linear_iterations += up.linear_iterations;
        if (!up.ok) {
            res.message = up.message;
            return res;
        }
        if (params.backtrack > 0) {
            double step_len = 1.0;
            double base = scaled_norm(prob, scales, assemble_residual(prob, x) - b);
            bool accepted = false;
            for (int j = 0; j <= params.backtrack; ++j, step_len *= params.theta) {
                Vec candidate = x + step_len * dx;
                if (params.chop_saturations) chop_saturations(prob.layout, candidate);
                const double n =
                    scaled_norm(prob, scales, assemble_residual(prob, candidate) - b);
                if (std::isfinite(n) && n <= base) {
                    x = std::move(candidate);
                    accepted = true;
                    break;
                }
            }
            if (!accepted) {
                // no step length improves the residual; stop smoothing here
                res.ok = true;
                res.scaled_residual = base;
                return res;
            }
        } else {
            x += dx;
            if (params.chop_saturations) chop_saturations(prob.layout, x);
        }
        ++res.steps;
    }
    res.scaled_residual = scaled_norm(prob, scales, assemble_residual(prob, x) - b);
    res.ok = true;
    return res;
}

} // namespace fasflow
