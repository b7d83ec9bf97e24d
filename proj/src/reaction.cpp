#include "shearfront/reaction.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "shearfront/error.hpp"

namespace shearfront {

std::string to_string(ReactionKind kind) {
  switch (kind) {
    case ReactionKind::ignition: return "ignition";
    case ReactionKind::kpp: return "kpp";
    case ReactionKind::cutoff: return "cutoff";
  }
  return "unknown";
}

namespace {

double bump_g(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
double bump_g_derivative(double s) { return s > 0.0 ? std::exp(-1.0 / s) / (s * s) : 0.0; }

}  // namespace

double smooth_switch(double v) {
  if (v <= 1.0) return 0.0;
  if (v >= 2.0) return 1.0;
  const double a = bump_g(v - 1.0);
  const double b = bump_g(2.0 - v);
  return a / (a + b);
}

double smooth_switch_derivative(double v) {
  if (v <= 1.0 || v >= 2.0) return 0.0;
  const double a = bump_g(v - 1.0);
  const double b = bump_g(2.0 - v);
  const double s = a + b;
  return (bump_g_derivative(v - 1.0) * b + a * bump_g_derivative(2.0 - v)) / (s * s);
}

struct Reaction::Impl {
  std::string name;
  ReactionKind kind;
  double theta;
  double fprime0;
  double lipschitz = 0.0;
  double theta_prime = 0.0;
  std::shared_ptr<const Reaction> parent;
  Fn f;
  Fn df;
};

namespace {

double sampled_lipschitz(const Reaction::Fn& df) {
  double lip = 0.0;
  for (int k = 0; k <= 1000; ++k) lip = std::max(lip, std::abs(df(k / 1000.0)));
  return lip;
}

}  // namespace

Reaction Reaction::ignition(double theta) {
  if (!(theta > 0.0 && theta < 1.0)) throw InputError("Reaction::ignition: theta must lie in (0, 1)");
  std::ostringstream name;
  name << "ignition_ramp(theta=" << theta << ")";
  return custom(
      name.str(), ReactionKind::ignition, theta, 0.0,
      [theta](double u) { return u > theta ? (u - theta) * (1.0 - u) : 0.0; },
      [theta](double u) { return u > theta ? 1.0 + theta - 2.0 * u : 0.0; });
}

Reaction Reaction::kpp(double fprime0, const std::string& form) {
  if (!(fprime0 > 0.0)) throw InputError("Reaction::kpp: fprime0 must be positive");
  std::ostringstream name;
  name << "kpp_" << form << "(fprime0=" << fprime0 << ")";
  if (form == "logistic") {
    return custom(
        name.str(), ReactionKind::kpp, 0.0, fprime0, [fprime0](double u) { return fprime0 * u * (1.0 - u); },
        [fprime0](double u) { return fprime0 * (1.0 - 2.0 * u); });
  }
  if (form == "cubic") {
    return custom(
        name.str(), ReactionKind::kpp, 0.0, fprime0, [fprime0](double u) { return fprime0 * u * (1.0 - u * u); },
        [fprime0](double u) { return fprime0 * (1.0 - 3.0 * u * u); });
  }
  throw InputError("Reaction::kpp: unknown form '" + form + "'");
}

Reaction Reaction::custom(std::string name, ReactionKind kind, double theta, double fprime0, Fn f, Fn df,
                          bool validate) {
  auto impl = std::make_shared<Impl>();
  impl->name = std::move(name);
  impl->kind = kind;
  impl->theta = theta;
  impl->fprime0 = fprime0;
  impl->f = std::move(f);
  impl->df = std::move(df);
  impl->lipschitz = sampled_lipschitz(impl->df);
  Reaction r(std::move(impl));
  if (validate) {
    const auto audit = audit_reaction(r);
    if (!audit.ok) throw InputError("Reaction '" + r.name() + "': " + audit.message);
  }
  return r;
}

ReactionKind Reaction::kind() const noexcept { return impl_->kind; }
double Reaction::theta() const noexcept { return impl_->theta; }
double Reaction::fprime0() const noexcept { return impl_->fprime0; }
double Reaction::lipschitz() const noexcept { return impl_->lipschitz; }
const std::string& Reaction::name() const noexcept { return impl_->name; }
double Reaction::theta_prime() const noexcept { return impl_->theta_prime; }
const Reaction* Reaction::parent() const noexcept { return impl_->parent.get(); }

double Reaction::operator()(double u) const {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return impl_->df(1.0) * (u - 1.0);
  return impl_->f(u);
}

double Reaction::derivative(double u) const {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return impl_->df(1.0);
  return impl_->df(u);
}

Reaction make_cutoff(const Reaction& parent, double theta_prime) {
  if (!(theta_prime > 0.0 && theta_prime <= 0.25)) {
    throw InputError("make_cutoff: theta' must lie in (0, 1/4]");
  }
  if (parent.kind() == ReactionKind::cutoff || parent.theta() != 0.0) {
    throw InputError("make_cutoff: parent must have zero ignition temperature");
  }
  auto impl = std::make_shared<Reaction::Impl>();
  std::ostringstream name;
  name << parent.name() << "*chi(u/" << theta_prime << ")";
  impl->name = name.str();
  impl->kind = ReactionKind::cutoff;
  impl->theta = theta_prime;
  impl->fprime0 = 0.0;
  impl->theta_prime = theta_prime;
  impl->parent = std::make_shared<const Reaction>(parent);
  impl->f = [p = parent, tp = theta_prime](double u) { return p(u) * smooth_switch(u / tp); };
  impl->df = [p = parent, tp = theta_prime](double u) {
    return p.derivative(u) * smooth_switch(u / tp) + p(u) * smooth_switch_derivative(u / tp) / tp;
  };
  impl->lipschitz = sampled_lipschitz(impl->df);
  Reaction r(std::move(impl));
  const auto audit = audit_reaction(r);
  if (!audit.ok) throw InputError("make_cutoff: " + audit.message);
  return r;
}

ReactionAudit audit_reaction(const Reaction& f, int samples) {
  ReactionAudit out;
  auto fail = [&](const std::string& what, double u, double v) {
    std::ostringstream msg;
    msg << what << " at u=" << u << " (f=" << v << ")";
    out.ok = false;
    out.message = msg.str();
  };
  const double theta = f.theta();
  if (const double v = f(1.0); v != 0.0) {
    fail("f(1) != 0", 1.0, v);
    return out;
  }
  for (int k = 0; k <= samples; ++k) {
    const double u = static_cast<double>(k) / samples;
    const double v = f(u);
    if (!std::isfinite(v)) {
      fail("non-finite value", u, v);
      return out;
    }
    if (u <= theta) {
      if (v != 0.0) {
        fail("f != 0 on [0, theta]", u, v);
        return out;
      }
    } else if (u < 1.0 && !(v > 0.0)) {
      fail("f not positive on (theta, 1)", u, v);
      return out;
    }
    if (f.kind() == ReactionKind::kpp && v > f.fprime0() * u * (1.0 + 1e-14)) {
      fail("KPP bound f(u) <= f'(0) u violated", u, v);
      return out;
    }
  }
  return out;
}

}  // namespace shearfront
