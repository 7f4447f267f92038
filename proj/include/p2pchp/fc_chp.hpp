#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace p2pchp {

// Thrown on bad user input (config files, CLI arguments, malformed data).
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exponential efficiency curves of a fuel-cell CHP unit:
//   eta(p) = a - b * exp(-k * p / p_fc_max)
// with a, b chosen so eta(0) = eta_0 and eta(p_fc_max) = eta_max.
// One curve for electrical output, one for heat recovery.
struct FuelCellCurve {
  double k_e = 4.0;
  double eta_e_0 = 0.20;
  double eta_e_max = 0.39;
  double k_hr = 5.0;
  double eta_hr_0 = 0.20;
  double eta_hr_max = 0.36;
  double p_fc_max = 0.7;      // kW, rated electrical output
  double p_fc_hw_min = 0.05;  // kW, hardware floor when running
  double eta_g2h = 0.95;      // fuel-to-hydrogen conversion efficiency

  double b_e() const;
  double a_e() const;
  double b_hr() const;
  double a_hr() const;

  void validate() const;  // throws ValidationError
};

// Shared per-step physical and price constants.
struct ThermalParams {
  double dt_hours = 0.5;  // timestep length
  double xi_e = 3.6;      // MJ per kWh
  double q_w = 0.004186;  // MJ to heat one litre of water by 1 degC
  double t_hot = 65.0;    // degC, hot water tank target
  double t_cold = 15.0;   // degC, inlet
  double p_gas = 1.2237;  // JPY per MJ of gas

  // Litres of hot water charged per kWh of electrical output, per unit of
  // the heat-to-electric efficiency ratio.
  double zeta(double eta_g2h) const;

  void validate() const;
};

// Affine fit y ~= alpha*x + beta over [fit_lo, fit_hi].
struct LinearFit {
  double alpha = 0.0;
  double beta = 0.0;
  double fit_lo = 0.0;
  double fit_hi = 0.0;
  double max_abs_residual = 0.0;  // same units as the fitted quantity
};

// Sampling window for the convexifying fits, as fractions of rated power.
struct FitConfig {
  double lo_frac = 0.3;
  double hi_frac = 1.0;
  int samples = 64;
};

double eta_electric(const FuelCellCurve& c, double p);
double eta_heat(const FuelCellCurve& c, double p);

// Gas energy drawn over one step to produce electrical power p (MJ).
double gas_energy_exact(const FuelCellCurve& c, const ThermalParams& th, double p);
double gas_energy_linear(const LinearFit& gas_fit, const FuelCellCurve& c,
                         const ThermalParams& th, double p);

// Gas cost over one step (JPY).
double gas_cost_exact(const FuelCellCurve& c, const ThermalParams& th, double p);
double gas_cost_linear(const LinearFit& gas_fit, const FuelCellCurve& c,
                       const ThermalParams& th, double p);

// Hot water charged into the tank over one step (litres).
double hot_water_exact(const FuelCellCurve& c, const ThermalParams& th, double p);
double hot_water_linear(const LinearFit& water_fit, const FuelCellCurve& c,
                        const ThermalParams& th, double p);

// Ordinary least squares line through (x, y) samples; residual is the
// max absolute deviation of the samples from the fitted line.
LinearFit fit_linearization(const std::vector<std::pair<double, double>>& samples);

// Fit of p / eta_e(p): makes gas energy affine in p.
LinearFit fit_gas_line(const FuelCellCurve& c, const FitConfig& cfg = {});
// Fit of (eta_hr(p) / eta_e(p)) * p: makes hot water affine in p.
LinearFit fit_water_line(const FuelCellCurve& c, const FitConfig& cfg = {});

}  // namespace p2pchp
