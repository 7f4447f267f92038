#include "p2pchp/fc_chp.hpp"

#include <cmath>
#include <sstream>

namespace p2pchp {

double FuelCellCurve::b_e() const {
  return (eta_e_max - eta_e_0) / (1.0 - std::exp(-k_e));
}
double FuelCellCurve::a_e() const { return b_e() + eta_e_0; }
double FuelCellCurve::b_hr() const {
  return (eta_hr_max - eta_hr_0) / (1.0 - std::exp(-k_hr));
}
double FuelCellCurve::a_hr() const { return b_hr() + eta_hr_0; }

void FuelCellCurve::validate() const {
  std::ostringstream bad;
  if (!(0.0 < eta_e_0 && eta_e_0 < eta_e_max && eta_e_max < 1.0))
    bad << "require 0 < eta_e_0 < eta_e_max < 1; ";
  if (!(0.0 < eta_hr_0 && eta_hr_0 < eta_hr_max && eta_hr_max < 1.0))
    bad << "require 0 < eta_hr_0 < eta_hr_max < 1; ";
  if (!(k_e > 0.0)) bad << "require k_e > 0; ";
  if (!(k_hr > 0.0)) bad << "require k_hr > 0; ";
  if (!(0.0 <= p_fc_hw_min && p_fc_hw_min < p_fc_max))
    bad << "require 0 <= p_fc_hw_min < p_fc_max; ";
  if (!(0.0 < eta_g2h && eta_g2h <= 1.0)) bad << "require 0 < eta_g2h <= 1; ";
  std::string s = bad.str();
  if (!s.empty()) throw ValidationError("fuel cell curve: " + s);
}

double ThermalParams::zeta(double eta_g2h) const {
  return dt_hours * xi_e / (q_w * (t_hot - t_cold) * eta_g2h);
}

void ThermalParams::validate() const {
  std::ostringstream bad;
  if (!(dt_hours > 0.0)) bad << "require dt_hours > 0; ";
  if (!(xi_e > 0.0)) bad << "require xi_e > 0; ";
  if (!(q_w > 0.0)) bad << "require q_w > 0; ";
  if (!(t_hot > t_cold)) bad << "require t_hot > t_cold; ";
  if (!(p_gas >= 0.0)) bad << "require p_gas >= 0; ";
  std::string s = bad.str();
  if (!s.empty()) throw ValidationError("thermal params: " + s);
}

double eta_electric(const FuelCellCurve& c, double p) {
  return c.a_e() - c.b_e() * std::exp(-c.k_e * p / c.p_fc_max);
}

double eta_heat(const FuelCellCurve& c, double p) {
  return c.a_hr() - c.b_hr() * std::exp(-c.k_hr * p / c.p_fc_max);
}

double gas_energy_exact(const FuelCellCurve& c, const ThermalParams& th,
                        double p) {
  return p * th.dt_hours * th.xi_e / (eta_electric(c, p) * c.eta_g2h);
}

double gas_energy_linear(const LinearFit& gas_fit, const FuelCellCurve& c,
                         const ThermalParams& th, double p) {
  return (gas_fit.alpha * p + gas_fit.beta) * th.dt_hours * th.xi_e / c.eta_g2h;
}

double gas_cost_exact(const FuelCellCurve& c, const ThermalParams& th,
                      double p) {
  return th.p_gas * gas_energy_exact(c, th, p);
}

double gas_cost_linear(const LinearFit& gas_fit, const FuelCellCurve& c,
                       const ThermalParams& th, double p) {
  return th.p_gas * gas_energy_linear(gas_fit, c, th, p);
}

double hot_water_exact(const FuelCellCurve& c, const ThermalParams& th,
                       double p) {
  return th.zeta(c.eta_g2h) * (eta_heat(c, p) / eta_electric(c, p)) * p;
}

double hot_water_linear(const LinearFit& water_fit, const FuelCellCurve& c,
                        const ThermalParams& th, double p) {
  return th.zeta(c.eta_g2h) * (water_fit.alpha * p + water_fit.beta);
}

LinearFit fit_linearization(
    const std::vector<std::pair<double, double>>& samples) {
  if (samples.size() < 2)
    throw ValidationError("fit_linearization: need at least 2 samples");
  const double n = static_cast<double>(samples.size());
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : samples) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  double lo = samples.front().first, hi = samples.front().first;
  for (const auto& [x, y] : samples) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (sxx == 0.0)
    throw ValidationError("fit_linearization: sample abscissae are identical");
  LinearFit f;
  f.alpha = sxy / sxx;
  f.beta = my - f.alpha * mx;
  f.fit_lo = lo;
  f.fit_hi = hi;
  for (const auto& [x, y] : samples)
    f.max_abs_residual =
        std::max(f.max_abs_residual, std::abs(y - (f.alpha * x + f.beta)));
  return f;
}

namespace {

template <typename F>
LinearFit fit_curve(const FuelCellCurve& c, const FitConfig& cfg, F value) {
  c.validate();
  if (!(0.0 <= cfg.lo_frac && cfg.lo_frac < cfg.hi_frac && cfg.hi_frac <= 1.0))
    throw ValidationError("fit config: require 0 <= lo_frac < hi_frac <= 1");
  if (cfg.samples < 2) throw ValidationError("fit config: require samples >= 2");
  std::vector<std::pair<double, double>> samples;
  samples.reserve(cfg.samples);
  const double lo = cfg.lo_frac * c.p_fc_max, hi = cfg.hi_frac * c.p_fc_max;
  for (int i = 0; i < cfg.samples; ++i) {
    const double p = lo + (hi - lo) * i / (cfg.samples - 1);
    samples.emplace_back(p, value(p));
  }
  return fit_linearization(samples);
}

}  // namespace

LinearFit fit_gas_line(const FuelCellCurve& c, const FitConfig& cfg) {
  return fit_curve(c, cfg, [&](double p) { return p / eta_electric(c, p); });
}

LinearFit fit_water_line(const FuelCellCurve& c, const FitConfig& cfg) {
  return fit_curve(c, cfg, [&](double p) {
    return eta_heat(c, p) / eta_electric(c, p) * p;
  });
}

}  // namespace p2pchp
