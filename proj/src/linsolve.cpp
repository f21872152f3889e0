#include "fasflow/linsolve.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <stdexcept>

namespace fasflow {

Ilu0::Ilu0(const SpMat& A) : lu_(A)
{
    const int n = static_cast<int>(lu_.rows());
    diag_.assign(n, -1);
    const int* outer = lu_.outerIndexPtr();
    const int* inner = lu_.innerIndexPtr();
    double* val = lu_.valuePtr();

    for (int i = 0; i < n; ++i)
        for (int p = outer[i]; p < outer[i + 1]; ++p)
            if (inner[p] == i) diag_[i] = p;
    for (int i = 0; i < n; ++i)
        if (diag_[i] < 0) throw std::runtime_error("Ilu0: structurally zero diagonal");

    // IKJ variant restricted to the sparsity pattern
    for (int i = 1; i < n; ++i) {
        for (int p = outer[i]; p < outer[i + 1] && inner[p] < i; ++p) {
            const int k = inner[p];
            const double piv = val[diag_[k]];
            if (piv == 0.0) throw std::runtime_error("Ilu0: zero pivot");
            const double lik = val[p] / piv;
            val[p] = lik;
            // subtract lik * U(k, j) for j > k present in row i
            int pi = p + 1;
            int pk = diag_[k] + 1;
            while (pi < outer[i + 1] && pk < outer[k + 1]) {
                if (inner[pi] == inner[pk]) {
                    val[pi] -= lik * val[pk];
                    ++pi;
                    ++pk;
                } else if (inner[pi] < inner[pk]) {
                    ++pi;
                } else {
                    ++pk;
                }
            }
        }
    }
}

Vec Ilu0::apply(const Vec& r) const
{
    const int n = static_cast<int>(lu_.rows());
    const int* outer = lu_.outerIndexPtr();
    const int* inner = lu_.innerIndexPtr();
    const double* val = lu_.valuePtr();

    Vec y(n);
    for (int i = 0; i < n; ++i) {
        double acc = r[i];
        for (int p = outer[i]; p < outer[i + 1] && inner[p] < i; ++p)
            acc -= val[p] * y[inner[p]];
        y[i] = acc;
    }
    Vec x(n);
    for (int i = n - 1; i >= 0; --i) {
        double acc = y[i];
        for (int p = diag_[i] + 1; p < outer[i + 1]; ++p)
            acc -= val[p] * x[inner[p]];
        x[i] = acc / val[diag_[i]];
    }
    return x;
}

namespace {

/// Two-stage CPR preconditioner: exact pressure-block solve followed by an
/// ILU(0) sweep on the full system.
class CprPreconditioner
{
public:
    CprPreconditioner(const SpMat& A, int pressure_size)
        : A_(A), np_(pressure_size), ilu_(A)
    {
        App_ = A.topLeftCorner(np_, np_);
        App_.makeCompressed();
        pressure_lu_.compute(App_);
        if (pressure_lu_.info() != Eigen::Success)
            throw std::runtime_error("CPR: pressure block factorization failed");
    }

    Vec apply(const Vec& r) const
    {
        Vec z = Vec::Zero(r.size());
        z.head(np_) = pressure_lu_.solve(r.head(np_));
        Vec r2 = r - A_ * z;
        z += ilu_.apply(r2);
        return z;
    }

private:
    const SpMat& A_;
    int np_;
    SpMat App_;
    Eigen::SparseLU<SpMat> pressure_lu_;
    Ilu0 ilu_;
};

/// Right-preconditioned restarted GMRES; reports true-residual reduction.
template <class Prec>
LinearReport gmres(const SpMat& A, const Vec& b, Vec& x, const Prec& prec,
                   double rtol, int max_iter, int restart)
{
    LinearReport rep;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        x.setZero();
        rep.ok = true;
        return rep;
    }

    int total_iter = 0;
    while (total_iter < max_iter) {
        Vec r = b - A * x;
        const double beta = r.norm();
        rep.rel_residual = beta / bnorm;
        if (rep.rel_residual <= rtol) {
            rep.ok = true;
            rep.iterations = total_iter;
            return rep;
        }

        const int m = std::min(restart, max_iter - total_iter);
        std::vector<Vec> v(m + 1), z(m);
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(m + 1, m);
        Vec cs = Vec::Zero(m), sn = Vec::Zero(m), g = Vec::Zero(m + 1);
        v[0] = r / beta;
        g[0] = beta;

        int j = 0;
        for (; j < m; ++j) {
            z[j] = prec.apply(v[j]);
            Vec w = A * z[j];
            for (int i = 0; i <= j; ++i) {
                h(i, j) = w.dot(v[i]);
                w -= h(i, j) * v[i];
            }
            h(j + 1, j) = w.norm();
            if (h(j + 1, j) > 0.0) v[j + 1] = w / h(j + 1, j);

            for (int i = 0; i < j; ++i) {
                const double t = cs[i] * h(i, j) + sn[i] * h(i + 1, j);
                h(i + 1, j) = -sn[i] * h(i, j) + cs[i] * h(i + 1, j);
                h(i, j) = t;
            }
            const double denom = std::hypot(h(j, j), h(j + 1, j));
            if (denom == 0.0) { ++j; break; } // breakdown
            cs[j] = h(j, j) / denom;
            sn[j] = h(j + 1, j) / denom;
            h(j, j) = denom;
            h(j + 1, j) = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            ++total_iter;

            if (std::abs(g[j + 1]) / bnorm <= 0.5 * rtol) { ++j; break; }
        }

        // back substitution of the small triangular system
        Vec y = Vec::Zero(j);
        for (int i = j - 1; i >= 0; --i) {
            double acc = g[i];
            for (int l = i + 1; l < j; ++l) acc -= h(i, l) * y[l];
            y[i] = acc / h(i, i);
        }
        for (int i = 0; i < j; ++i) x += y[i] * z[i];
        if (j == 0) break; // no progress possible
    }

    Vec r = b - A * x;
    rep.rel_residual = r.norm() / bnorm;
    rep.iterations = total_iter;
    rep.ok = rep.rel_residual <= rtol;
    if (!rep.ok) rep.message = "GMRES stagnated or hit the iteration cap";
    return rep;
}

} // namespace

LinearReport solve(const BlockSystem& system, Vec& x, const LinearOptions& opts)
{
    LinearReport rep;
    if (system.A.rows() != system.A.cols() || system.A.rows() != system.rhs.size()) {
        rep.message = "inconsistent system dimensions";
        return rep;
    }
    const bool small = system.A.rows() < opts.direct_below;
    if (opts.method == LinearMethod::Direct || small) {
        Eigen::SparseLU<SpMat> lu;
        SpMat A = system.A;
        A.makeCompressed();
        lu.compute(A);
        if (lu.info() != Eigen::Success) {
            rep.message = "sparse LU factorization failed (singular system?)";
            return rep;
        }
        x = lu.solve(system.rhs);
        rep.iterations = 1;
        const double bnorm = system.rhs.norm();
        rep.rel_residual = bnorm > 0.0 ? (system.rhs - system.A * x).norm() / bnorm : 0.0;
        rep.ok = std::isfinite(rep.rel_residual) && rep.rel_residual <= 1e-6;
        if (!rep.ok) rep.message = "direct solve produced a large residual (singular system?)";
        return rep;
    }

    try {
        CprPreconditioner prec(system.A, system.pressure_size);
        if (x.size() != system.rhs.size()) x = Vec::Zero(system.rhs.size());
        return gmres(system.A, system.rhs, x, prec, opts.rtol, opts.max_iter,
                     opts.restart);
    } catch (const std::exception& e) {
        rep.message = e.what();
        return rep;
    }
}

} // namespace fasflow
