#include "tnn/pricing.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss.hpp>

namespace tnn::pricing {

namespace {

using cplx = std::complex<double>;
constexpr cplx kI{0.0, 1.0};
constexpr std::size_t kNodesPerPanel = 32;

// Continuous log of z(s) = (1 − g e^{−γs}) / (1 − g) for s from 0 to tau.
// z is handled as 1 + w so that the tiny-g regime (η → 0) keeps its precision.
cplx continuous_log_ratio(cplx g, cplx gamma, double tau) {
  if (tau <= 0.0) return 0.0;
  const cplx scale = g / (1.0 - g);
  const auto w = [&](double s) { return scale * (1.0 - std::exp(-gamma * s)); };

  double phase = 0.0;
  double s = 0.0;
  double h = tau / 4.0;
  cplx prev = 1.0;
  const double min_step = tau * 1e-9;
  while (s < tau) {
    h = std::min(h, tau - s);
    const cplx next = 1.0 + w(s + h);
    const double step_phase = std::arg(next / prev);
    if (std::abs(step_phase) > std::numbers::pi / 4.0 && h > min_step) {
      h *= 0.5;
      continue;
    }
    phase += step_phase;
    prev = next;
    s += h;
    h *= 2.0;
  }
  const cplx end = w(tau);
  const double log_modulus = 0.5 * std::log1p(2.0 * end.real() + std::norm(end));
  return {log_modulus, phase};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

AffineCoefficients affine_coeffs(cplx omega, double t, const sde::HestonParams& p) {
  p.validate();
  if (t > p.maturity) throw InvalidArgument("affine_coeffs: t exceeds maturity");
  const double tau = p.maturity - t;
  const double eta2 = p.eta * p.eta;

  AffineCoefficients c;
  c.alpha = 0.5 * (omega * omega + kI * omega);
  c.beta = p.kappa - p.rho * p.eta * kI * omega;
  c.gamma = std::sqrt(c.beta * c.beta + 2.0 * eta2 * c.alpha);
  c.r_plus = (c.beta + c.gamma) / eta2;
  if (c.r_plus == cplx(0.0, 0.0)) throw InvalidArgument("affine_coeffs: degenerate r_plus == 0");
  // (β − γ)/η² rewritten as −2α/(β + γ) to avoid cancellation when η is small
  c.r_minus = -2.0 * c.alpha / (c.beta + c.gamma);
  c.c = kI * omega;

  if (tau == 0.0) {
    c.a = 0.0;
    c.b = 0.0;
    return c;
  }
  const cplx g = c.r_minus / c.r_plus;
  const cplx decay = std::exp(-c.gamma * tau);
  c.b = c.r_minus * (1.0 - decay) / (1.0 - g * decay);
  c.a = p.kappa * p.theta * (c.r_minus * tau - (2.0 / eta2) * continuous_log_ratio(g, c.gamma, tau));
  c.a += kI * omega * p.rate * tau;
  return c;
}

AffineCoefficients affine_coeffs(double omega, double t, const sde::HestonParams& p) {
  return affine_coeffs(cplx(omega, 0.0), t, p);
}

cplx u_omega(double t, double x, double v, cplx omega, const sde::HestonParams& p) {
  const AffineCoefficients c = affine_coeffs(omega, t, p);
  return std::exp(c.a + c.b * v + c.c * x);
}

cplx u_omega(double t, double x, double v, double omega, const sde::HestonParams& p) {
  return u_omega(t, x, v, cplx(omega, 0.0), p);
}

PriceResult heston_european(const sde::HestonParams& params, double strike, double maturity, OptionKind kind,
                            const QuadratureSpec& quad) {
  if (!(strike > 0.0) || !(maturity > 0.0)) throw InvalidArgument("heston_european: strike and maturity must be positive");
  if (quad.panels == 0) throw InvalidArgument("heston_european: need at least one panel");
  sde::HestonParams p = params;
  p.maturity = maturity;
  p.validate();

  const double x0 = std::log(p.spot);
  const double log_k = std::log(strike);
  const double discount = std::exp(-p.rate * maturity);

  const auto integrand = [&](double w) {
    const cplx phi = u_omega(0.0, x0, p.v0, cplx(w, 0.0), p);
    const cplx phi_shift = u_omega(0.0, x0, p.v0, cplx(w, -1.0), p);
    const cplx value = std::exp(-kI * w * log_k) * (phi_shift - strike * phi) / (kI * w);
    return value.real();
  };
  const auto envelope = [&](double w) {
    const cplx phi = u_omega(0.0, x0, p.v0, cplx(w, 0.0), p);
    const cplx phi_shift = u_omega(0.0, x0, p.v0, cplx(w, -1.0), p);
    return (std::abs(phi_shift) + strike * std::abs(phi)) / w;
  };

  double omega_max = quad.omega_max;
  if (omega_max <= 0.0) {
    omega_max = 8.0;
    while (envelope(omega_max) > quad.tail_tolerance) {
      omega_max *= 2.0;
      if (omega_max > 1e5) throw QuadratureError("heston_european: characteristic function tail does not decay");
    }
  }

  const auto integrate = [&](std::size_t panels) {
    const double width = omega_max / static_cast<double>(panels);
    double total = 0.0;
    for (std::size_t k = 0; k < panels; ++k) {
      const double lo = width * static_cast<double>(k);
      total += boost::math::quadrature::gauss<double, kNodesPerPanel>::integrate(integrand, lo, lo + width);
    }
    return total;
  };

  const double coarse = integrate(quad.panels);
  const double fine = integrate(2 * quad.panels);
  const auto call_from = [&](double integral) {
    return 0.5 * (p.spot - strike * discount) + discount * integral / std::numbers::pi;
  };
  const double call_coarse = call_from(coarse);
  const double call_fine = call_from(fine);
  const double err = std::abs(call_fine - call_coarse);
  if (!(err <= quad.refine_tolerance)) {
    throw QuadratureError("heston_european: refinement changed the price by " + std::to_string(err));
  }

  PriceResult r;
  r.price = kind == OptionKind::Call ? call_fine : call_fine - p.spot + strike * discount;
  r.quadrature_nodes = 2 * quad.panels * kNodesPerPanel;
  r.est_error = err;
  r.omega_max = omega_max;
  return r;
}

double black_scholes(double spot, double strike, double rate, double dividend, double vol, double maturity,
                     OptionKind kind) {
  if (!(vol > 0.0) || !(maturity > 0.0)) throw InvalidArgument("black_scholes: vol and maturity must be positive");
  const double sd = vol * std::sqrt(maturity);
  const double d1 = (std::log(spot / strike) + (rate - dividend + 0.5 * vol * vol) * maturity) / sd;
  const double d2 = d1 - sd;
  const double df_q = std::exp(-dividend * maturity);
  const double df_r = std::exp(-rate * maturity);
  if (kind == OptionKind::Call) return spot * df_q * normal_cdf(d1) - strike * df_r * normal_cdf(d2);
  return strike * df_r * normal_cdf(-d2) - spot * df_q * normal_cdf(-d1);
}

}  // namespace tnn::pricing
