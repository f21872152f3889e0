#include "fasflow/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fasflow {

FluidModel::FluidModel(double mu_w, double mu_nw, double gamma, bool extend)
    : mu_w_(mu_w), mu_nw_(mu_nw), gamma_(gamma), extend_(extend)
{
    if (mu_w <= 0.0 || mu_nw <= 0.0)
        throw std::invalid_argument("FluidModel: viscosities must be positive");
    if (gamma < 1.0)
        throw std::invalid_argument("FluidModel: relperm exponent must be >= 1");
}

namespace {

double clamp01(double s) { return std::min(1.0, std::max(0.0, s)); }

// power-law relperm exponents are small integers in practice
double int_pow(double base, double exponent)
{
    const int n = static_cast<int>(exponent);
    if (static_cast<double>(n) == exponent && n >= 1 && n <= 6) {
        double acc = base;
        for (int i = 1; i < n; ++i) acc *= base;
        return acc;
    }
    return std::pow(base, exponent);
}

} // namespace

double FluidModel::mobility(Phase phase, double s) const
{
    const double sw = extend_ ? clamp01(s) : s;
    if (phase == Phase::Wetting)
        return int_pow(sw, gamma_) / mu_w_;
    const double snw = extend_ ? clamp01(1.0 - s) : 1.0 - s;
    return int_pow(snw, gamma_) / mu_nw_;
}

double FluidModel::mobility_deriv(Phase phase, double s) const
{
    if (extend_ && (s < 0.0 || s > 1.0))
        return 0.0;
    const double sw = clamp01(s);
    if (phase == Phase::Wetting)
        return gamma_ == 1.0 ? 1.0 / mu_w_ : gamma_ * int_pow(sw, gamma_ - 1.0) / mu_w_;
    return gamma_ == 1.0 ? -1.0 / mu_nw_
                         : -gamma_ * int_pow(1.0 - sw, gamma_ - 1.0) / mu_nw_;
}

double FluidModel::total_mobility(double s) const
{
    return mobility(Phase::Wetting, s) + mobility(Phase::NonWetting, s);
}

double FluidModel::total_mobility_deriv(double s) const
{
    return mobility_deriv(Phase::Wetting, s) + mobility_deriv(Phase::NonWetting, s);
}

double FluidModel::fractional_flow(double s) const
{
    const double lw = mobility(Phase::Wetting, s);
    return lw / (lw + mobility(Phase::NonWetting, s));
}

double FluidModel::fractional_flow_deriv(double s) const
{
    const double lw = mobility(Phase::Wetting, s);
    const double lnw = mobility(Phase::NonWetting, s);
    const double dlw = mobility_deriv(Phase::Wetting, s);
    const double dlnw = mobility_deriv(Phase::NonWetting, s);
    const double lam = lw + lnw;
    return (dlw * lnw - lw * dlnw) / (lam * lam);
}

double FluidModel::max_fractional_flow_deriv(int samples) const
{
    double best = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double s = static_cast<double>(i) / (samples - 1);
        best = std::max(best, fractional_flow_deriv(s));
    }
    return best;
}

} // namespace fasflow
