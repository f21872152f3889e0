#ifndef FASFLOW_FLUID_HPP
#define FASFLOW_FLUID_HPP

namespace fasflow {

enum class Phase { Wetting, NonWetting };

/// Two-phase fluid model with power-law relative permeabilities,
/// k_r = s_alpha^gamma, and constant extension of the mobilities
/// outside the physical saturation range [0,1].
///
/// All evaluations are pure functions of the wetting-phase saturation.
class FluidModel
{
public:
    FluidModel(double mu_w, double mu_nw, double gamma, bool extend = true);

    /// Phase mobility lambda_alpha(s) = k_r(s)/mu  [1/(Pa s)]
    double mobility(Phase phase, double s) const;

    /// d lambda_alpha / ds (zero outside [0,1] with extension on)
    double mobility_deriv(Phase phase, double s) const;

    /// Total mobility lambda(s) = lambda_w + lambda_nw; positive on [0,1].
    double total_mobility(double s) const;
    double total_mobility_deriv(double s) const;

    /// Fractional flow f_w = lambda_w / lambda and its derivative.
    double fractional_flow(double s) const;
    double fractional_flow_deriv(double s) const;

    /// max over s in [0,1] of f_w'(s), sampled on a uniform grid.
    double max_fractional_flow_deriv(int samples = 1001) const;

    double mu_w() const { return mu_w_; }
    double mu_nw() const { return mu_nw_; }
    double gamma() const { return gamma_; }
    bool extended() const { return extend_; }

private:
    double mu_w_;
    double mu_nw_;
    double gamma_;
    bool extend_;
};

} // namespace fasflow

#endif
