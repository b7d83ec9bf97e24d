#pragma once

#include <functional>
#include <memory>
#include <string>

namespace shearfront {

enum class ReactionKind { ignition, kpp, cutoff };

std::string to_string(ReactionKind kind);

/// Smooth switch chi: 0 on (-inf, 1], 1 on [2, inf), non-decreasing,
/// chi(v) = g(v - 1) / (g(v - 1) + g(2 - v)) with g(s) = exp(-1/s) for s > 0.
double smooth_switch(double v);
double smooth_switch_derivative(double v);

/// Non-negative reaction term f on [0, 1] with f = 0 on [0, theta] and at 1,
/// f > 0 on (theta, 1). Immutable; copies share the underlying definition.
///
/// Outside [0, 1] the term is extended by 0 below 0 and linearly with slope
/// f'(1) above 1, so Newton iterates that overshoot still see a restoring force.
class Reaction {
 public:
  using Fn = std::function<double(double)>;

  /// Ignition ramp f(u) = (u - theta)_+ (1 - u), 0 < theta < 1.
  static Reaction ignition(double theta);
  /// KPP reactions with f'(0) = fprime0: "logistic" fprime0 u (1 - u) or
  /// "cubic" fprime0 u (1 - u^2).
  static Reaction kpp(double fprime0, const std::string& form = "logistic");
  /// User-supplied f and f'. With validate = true the sign pattern is
  /// checked on a 1e3-point sample and InputError thrown on violation.
  static Reaction custom(std::string name, ReactionKind kind, double theta, double fprime0, Fn f, Fn df,
                         bool validate = true);

  ReactionKind kind() const noexcept;
  double theta() const noexcept;
  double fprime0() const noexcept;
  double lipschitz() const noexcept;
  const std::string& name() const noexcept;
  /// Cut-off level for kind == cutoff, 0 otherwise.
  double theta_prime() const noexcept;
  /// Parent reaction of a cutoff, nullptr otherwise.
  const Reaction* parent() const noexcept;

  double operator()(double u) const;
  double derivative(double u) const;

 private:
  struct Impl;
  explicit Reaction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  friend Reaction make_cutoff(const Reaction&, double);
  std::shared_ptr<const Impl> impl_;
};

/// f_{theta'}(u) = f(u) chi(u / theta') for a KPP-type parent and theta' in (0, 1/4].
Reaction make_cutoff(const Reaction& parent, double theta_prime);

/// Sign-pattern audit on `samples` + 1 equispaced points of [0, 1].
struct ReactionAudit {
  bool ok = true;
  std::string message;
};
ReactionAudit audit_reaction(const Reaction& f, int samples = 1000);

}  // namespace shearfront
