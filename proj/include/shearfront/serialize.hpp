#pragma once

#include <json.hpp>

#include "shearfront/limit_problem.hpp"
#include "shearfront/spectral.hpp"

namespace shearfront {

using Json = nlohmann::ordered_json;

/// Non-finite doubles become null so the output stays valid JSON.
Json number(double v);

Json to_json(const TorusGrid& grid);
TorusGrid torus_from_json(const Json& j);

/// Self-describing field records: grid metadata plus row-major values.
Json torus_field_to_json(const TorusGrid& grid, const Field& values);
Json cylinder_field_to_json(const CylinderGrid& grid, const Field& values);
/// Inverse of cylinder_field_to_json; throws InputError on malformed input.
std::pair<CylinderGrid, Field> cylinder_field_from_json(const Json& j);

Json to_json(const IdentityReport& r);
Json to_json(const BarrierReport& r);
Json to_json(const CertificateResult& r);
Json to_json(const LimitIdentityReport& r);
Json to_json(const GammaStarEstimate& e);
Json to_json(const KppLimitResult& r);

/// Scalars of a solve, without the field.
Json solution_summary(const FrontSolution& sol);
/// Summary plus the field record.
Json solution_to_json(const FrontSolution& sol);

}  // namespace shearfront
