#ifndef FASFLOW_STATE_HPP
#define FASFLOW_STATE_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace fasflow {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Fixed ordering of the unknown blocks: face fluxes, perforation fluxes,
/// cell pressures, well pressures, cell saturations.
struct BlockLayout
{
    int n_faces = 0;
    int n_perfs = 0;
    int n_cells = 0;
    int n_wells = 0;

    int sigma_r(int e) const { return e; }
    int sigma_w(int p) const { return n_faces + p; }
    int p_r(int c) const { return n_faces + n_perfs + c; }
    int p_w(int w) const { return n_faces + n_perfs + n_cells + w; }
    int s(int c) const { return n_faces + n_perfs + n_cells + n_wells + c; }

    int sigma_r_begin() const { return 0; }
    int sigma_w_begin() const { return n_faces; }
    int p_r_begin() const { return n_faces + n_perfs; }
    int p_w_begin() const { return n_faces + n_perfs + n_cells; }
    int s_begin() const { return n_faces + n_perfs + n_cells + n_wells; }
    int total() const { return n_faces + n_perfs + 2 * n_cells + n_wells; }

    bool operator==(const BlockLayout&) const = default;
};

} // namespace fasflow

#endif
