#include "shearfront/serialize.hpp"

#include <cmath>

#include "shearfront/error.hpp"

namespace shearfront {

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

namespace {

Json numbers(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string("field record: missing '") + key + "'");
  return j.at(key);
}

}  // namespace

Json to_json(const TorusGrid& grid) { return Json{{"dim", grid.dim()}, {"points_per_dim", grid.points_per_dim()}}; }

TorusGrid torus_from_json(const Json& j) {
  try {
    return TorusGrid(field(j, "dim").get<int>(), field(j, "points_per_dim").get<int>());
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("torus grid record: ") + e.what());
  }
}

Json torus_field_to_json(const TorusGrid& grid, const Field& values) {
  if (values.size() != grid.size()) throw InputError("torus_field_to_json: size mismatch");
  return Json{{"kind", "torus_field"}, {"torus", to_json(grid)}, {"layout", "row-major, first coordinate slowest"},
              {"values", numbers(values)}};
}

Json cylinder_field_to_json(const CylinderGrid& grid, const Field& values) {
  if (values.size() != grid.size()) throw InputError("cylinder_field_to_json: size mismatch");
  return Json{{"kind", "cylinder_field"},
              {"torus", to_json(grid.torus())},
              {"x_min", grid.x_min()},
              {"x_max", grid.x_max()},
              {"n_x", grid.n_x()},
              {"layout", "row-major, x slowest"},
              {"values", numbers(values)}};
}

std::pair<CylinderGrid, Field> cylinder_field_from_json(const Json& j) {
  if (field(j, "kind") != "cylinder_field") throw InputError("field record: kind is not cylinder_field");
  try {
    CylinderGrid grid(torus_from_json(field(j, "torus")), field(j, "x_min").get<double>(),
                      field(j, "x_max").get<double>(), field(j, "n_x").get<int>());
    const Json& v = field(j, "values");
    if (!v.is_array() || v.size() != grid.size()) throw InputError("field record: values do not match the grid");
    Field values(grid.size());
    for (std::size_t k = 0; k < values.size(); ++k) {
      values[k] = v[k].is_null() ? std::nan("") : v[k].get<double>();
    }
    return {grid, std::move(values)};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("field record: ") + e.what());
  }
}

Json to_json(const IdentityReport& r) {
  return Json{{"reaction_integral", number(r.reaction_integral)}, {"gamma", number(r.gamma)},
              {"energy_lhs", number(r.energy_lhs)},               {"energy_rhs", number(r.energy_rhs)},
              {"rel_err_reaction", number(r.rel_err_reaction)},   {"rel_err_energy", number(r.rel_err_energy)},
              {"ux_l1", number(r.ux_l1)}};
}

Json to_json(const BarrierReport& r) {
  return Json{{"holds", r.holds},
              {"min_slack", number(r.min_slack)},
              {"worst_i", r.worst_i},
              {"worst_j", r.worst_j},
              {"violations", r.violations},
              {"phi_max", number(r.phi_max)}};
}

Json to_json(const CertificateResult& r) {
  return Json{{"bound", number(r.bound)}, {"worst_i", r.worst_i},     {"worst_j", r.worst_j},
              {"first_column", r.first_column}, {"last_column", r.last_column}, {"evaluated", r.evaluated},
              {"skipped", r.skipped},     {"sweeps", r.sweeps}};
}

Json to_json(const LimitIdentityReport& r) {
  return Json{{"gamma", number(r.gamma)},
              {"reaction_integral", number(r.reaction_integral)},
              {"rel_gap", number(r.rel_gap)},
              {"half_line_start", number(r.half_line_start)},
              {"half_line_integral", number(r.half_line_integral)},
              {"half_line_rel", number(r.half_line_rel)},
              {"tolerance", number(r.tolerance)},
              {"no_front", r.no_front},
              {"contradiction", r.contradiction},
              {"passes", r.passes}};
}

Json to_json(const GammaStarEstimate& e) {
  Json pts = Json::array();
  for (const auto& p : e.points) {
    pts.push_back(Json{{"parameter", number(p.parameter)}, {"value", number(p.value)}, {"error_bar", number(p.error_bar)}});
  }
  return Json{{"route", to_string(e.route)},
              {"value", number(e.value)},
              {"error_bar", number(e.error_bar)},
              {"model", e.model},
              {"points", pts},
              {"difference_ratios", numbers(e.difference_ratios)},
              {"warning", e.warning},
              {"warning_message", e.warning_message},
              {"alt_model", e.alt_model},
              {"alt_value", number(e.alt_value)},
              {"alt_error_bar", number(e.alt_error_bar)},
              {"bounds_applicable", e.bounds_applicable},
              {"lower_strict", e.lower_strict},
              {"upper_strict", e.upper_strict}};
}

Json to_json(const KppLimitResult& r) {
  return Json{{"value", number(r.value)},
              {"t_star", number(r.t_star)},
              {"dirichlet_quotient", number(r.dirichlet_quotient)},
              {"constraint_active", r.constraint_active},
              {"bisection_steps", r.bisection_steps}};
}

Json solution_summary(const FrontSolution& sol) {
  return Json{{"amplitude", number(sol.amplitude)},
              {"gamma", number(sol.gamma)},
              {"speed", number(sol.speed())},
              {"reaction", sol.reaction.name()},
              {"x_min", number(sol.grid.x_min())},
              {"x_max", number(sol.grid.x_max())},
              {"n_x", sol.grid.n_x()},
              {"residual_norm", number(sol.residual_norm)},
              {"newton_iterations", sol.newton_iterations},
              {"pseudo_time_steps", sol.pseudo_time_steps},
              {"factorizations", sol.factorizations},
              {"pin_defect", number(sol.pin_defect)},
              {"left_defect", number(sol.left_defect)},
              {"right_defect", number(sol.right_defect)},
              {"monotonicity_defect", number(sol.monotonicity_defect)},
              {"range_defect", number(sol.range_defect)}};
}

Json solution_to_json(const FrontSolution& sol) {
  Json j = solution_summary(sol);
  j["field"] = cylinder_field_to_json(sol.grid, sol.U);
  return j;
}

}  // namespace shearfront
