#pragma once

#include <complex>
#include <cstddef>

#include "tnn/sde.hpp"

namespace tnn::pricing {

enum class OptionKind { Call, Put };

/// Thrown when the Fourier quadrature fails its refinement check.
class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Exponential-affine coefficients of E[e^{iωX_T} | X_t, v_t] = exp(A + B v_t + C X_t).
struct AffineCoefficients {
  std::complex<double> a, b, c;
  std::complex<double> r_plus, r_minus;
  std::complex<double> alpha, beta, gamma;
};

/// Closed forms with τ = T − t, α = (ω² + iω)/2, β = κ − ρηiω, γ = √(β² + 2η²α)
/// (principal root, Re γ ≥ 0), r± = (β ± γ)/η²:
///   A = κθ [r₋τ − (2/η²) log((1 − (r₋/r₊) e^{−γτ}) / (1 − r₋/r₊))] + iωrτ
///   B = r₋ (1 − e^{−γτ}) / (1 − (r₋/r₊) e^{−γτ}),   C = iω.
/// The iωrτ drift term vanishes for r = 0.
///
/// The logarithm is tracked continuously along s ∈ [0, τ] starting from
/// log 1 = 0: the phase is accumulated over sub-steps short enough that each
/// phase increment stays below π/4, which fixes the rotation count (number of
/// 2π windings) instead of taking the principal branch of the final value.
///
/// The complex-ω overload evaluates the same expressions off the real axis
/// (used at ω − i for the share-measure probability).
AffineCoefficients affine_coeffs(double omega, double t, const sde::HestonParams& params);
AffineCoefficients affine_coeffs(std::complex<double> omega, double t, const sde::HestonParams& params);

/// exp(A_ω(t) + B_ω(t) v + C_ω(t) x).
std::complex<double> u_omega(double t, double x, double v, double omega, const sde::HestonParams& params);
std::complex<double> u_omega(double t, double x, double v, std::complex<double> omega,
                             const sde::HestonParams& params);

/// Panelled Gauss-Legendre rule on [0, ω_max] with 32 nodes per panel.
struct QuadratureSpec {
  std::size_t panels = 32;
  /// 0 selects ω_max automatically: doubled from 8 until the integrand envelope drops below tail_tolerance.
  double omega_max = 0.0;
  double tail_tolerance = 1e-12;
  /// Maximum change allowed when the panel count is doubled.
  double refine_tolerance = 1e-8;
};

struct PriceResult {
  double price = 0.0;
  std::size_t quadrature_nodes = 0;
  double est_error = 0.0;
  double omega_max = 0.0;
};

/// European option under Heston by Gil-Pelaez inversion of ω ↦ u_ω(0, log S₀, v₀):
///   C = (S₀ − K e^{−rT})/2 + (e^{−rT}/π) ∫₀^∞ Re[e^{−iω log K}(φ(ω − i) − K φ(ω)) / (iω)] dω
/// with φ(ω) = u_ω(0, log S₀, v₀); puts by parity. `maturity` overrides params.maturity.
PriceResult heston_european(const sde::HestonParams& params, double strike, double maturity, OptionKind kind,
                            const QuadratureSpec& quad = {});

/// Black-Scholes with continuous dividend yield q.
double black_scholes(double spot, double strike, double rate, double dividend, double vol, double maturity,
                     OptionKind kind);

}  // namespace tnn::pricing
