#pragma once

#include "srflab/heat.hpp"
#include "srflab/transport.hpp"

#include <json.hpp>

#include <cstdint>
#include <limits>
#include <string>

namespace srflab {

/// Pass threshold: absolute + relative · scale, where the scale is chosen by
/// each checker (sup of the dominating side of the inequality).
struct Tolerance {
  double absolute = 0.0;
  double relative = 0.0;

  [[nodiscard]] double at(double scale) const { return absolute + relative * scale; }
};

struct CheckOptions {
  Tolerance tolerance;
  /// Vertices with fewer neighbours than the maximum are left out of the
  /// pass decision and reported in boundary_slack instead.
  bool exclude_boundary = true;
};

/// Where the worst slack was attained.
struct Location {
  long vertex = -1;
  long other = -1;
  double time = std::numeric_limits<double>::quiet_NaN();
  long trial = -1;
};

struct CheckReport {
  std::string name;
  /// Worst signed margin; >= 0 means the inequality holds.
  double slack = 0.0;
  Location location;
  /// Absolute threshold actually applied.
  double tolerance = 0.0;
  double scale = 1.0;
  nlohmann::json params = nlohmann::json::object();
  bool pass = true;
  /// Worst slack over boundary vertices; NaN when nothing was excluded.
  double boundary_slack = std::numeric_limits<double>::quiet_NaN();

  [[nodiscard]] double normalized_slack() const { return scale > 0.0 ? slack / scale : slack; }
};

nlohmann::json to_json(const CheckReport& report);

/// (Γ_t(P_{t,s}u))^α ≤ P_{t,s}(Γ_s(u)^α) per vertex. Scale: max of P(Γ_s(u)^α).
CheckReport gradient_estimate_check(const DynamicSpace& space, const Field& u, double s, double t,
                                    double alpha, int steps, const CheckOptions& options = {});

/// W_{p,s}(P̂μ, P̂ν) ≤ W_{p,t}(μ, ν). Scale: W_{p,t}(μ, ν).
CheckReport transport_estimate_check(const DynamicSpace& space, const Measure& mu, const Measure& nu, double s,
                                     double t, double p, int steps, const CheckOptions& options = {});

/// H_t[u](g, h) = ½(Γ(g, Γ(u, h)) + Γ(h, Γ(u, g)) - Γ(u, Γ(g, h))).
Field hessian(const DynamicSpace& space, double t, const Field& u, const Field& g, const Field& h);

/// Γ₂(u)(g) = Σ[-½Γ(Γ(u), g) + g (Δu)² + Γ(g, u) Δu] m_t.
double gamma2(const DynamicSpace& space, double t, const Field& u, const Field& g);
/// The same quantity written as Σ[½Γ(u)Δg + (Δu)² g + Γ(u, g)Δu] m_t.
double gamma2_by_parts(const DynamicSpace& space, double t, const Field& u, const Field& g);
/// Pointwise γ₂(u) = ½Δ(Γ(u)) - Γ(u, Δu).
Field gamma2_density(const DynamicSpace& space, double t, const Field& u);

/// Γ₂(u)(g) - ½Σ(∂_tΓ)(u) g m_t, with ∂_tΓ by central difference.
/// Scale: ‖g‖₁ · max Γ_t(u). Throws invalid_test_function for negative g.
CheckReport bochner_check(const DynamicSpace& space, double t, const Field& u, const Field& g, double delta,
                          const CheckOptions& options = {});

/// Worst normalized bochner_check over random (u, g) pairs; the worst pair is
/// stored in params["witness"]. Trial i smooths u over eps · 4^(i mod 4).
CheckReport bochner_scan(const DynamicSpace& space, double t, int trials, std::uint64_t seed, double delta,
                         const CheckOptions& options = {}, double eps = 0.05);

/// 4(γ₂(u) - ½∂_tΓ(u)) Γ(u) - Γ(Γ(u)) per vertex. Scale: max of both terms.
CheckReport self_improvement_check(const DynamicSpace& space, double t, const Field& u, double delta,
                                   const CheckOptions& options = {});

/// -max_x |Γ_t(u) - Γ_s(u) e^{-2∫_s^t H_r(x) dr}|. Scale: max Γ_s(u).
/// Throws inapplicable when f depends on time.
CheckReport gamma_scaling_check(const DynamicSpace& space, const Field& u, double s, double t,
                                const CheckOptions& options = {});

struct KuwadaOptions {
  int steps = 32;
  CheckOptions gradient;
  CheckOptions transport;
};

/// Gradient estimate with exponent β (α = β/2) and transport estimate with the
/// conjugate p on `trials` random inputs. Passes iff every trial whose
/// gradient check passes also passes the transport check.
CheckReport kuwada_cross_check(const DynamicSpace& space, double s, double t, double p, double beta,
                               int trials, std::uint64_t seed, const KuwadaOptions& options = {});

}  // namespace srflab
