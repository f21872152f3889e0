#ifndef FASFLOW_LINSOLVE_HPP
#define FASFLOW_LINSOLVE_HPP

#include <string>

#include "fasflow/state.hpp"

namespace fasflow {

enum class LinearMethod { Direct, Cpr };

struct LinearOptions
{
    LinearMethod method = LinearMethod::Cpr;
    double rtol = 1e-8;
    int max_iter = 200;
    int restart = 30;
    // below this size a factorization beats the two-stage setup
    int direct_below = 1500;
};

struct LinearReport
{
    bool ok = false;
    int iterations = 0;
    double rel_residual = 0.0;
    std::string message;
};

/// 2x2 block system over (pressure-like, saturation) unknowns: the first
/// pressure_size unknowns form the pressure-like block.
struct BlockSystem
{
    SpMat A;
    Vec rhs;
    int pressure_size = 0;
};

/// Solves a block system either with a sparse direct factorization or with
/// restarted GMRES preconditioned by a CPR-type two-stage preconditioner
/// (stage 1: direct solve of the pressure-pressure block, stage 2: ILU(0)
/// sweep on the full system, combined multiplicatively).
LinearReport solve(const BlockSystem& system, Vec& x, const LinearOptions& opts);

/// Zero-fill incomplete LU factorization of a sparse matrix.
class Ilu0
{
public:
    explicit Ilu0(const SpMat& A);
    Vec apply(const Vec& r) const; // (LU)^{-1} r
private:
    Eigen::SparseMatrix<double, Eigen::RowMajor> lu_;
    std::vector<int> diag_;
};

} // namespace fasflow

#endif
