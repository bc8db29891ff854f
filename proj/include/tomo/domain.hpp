#pragma once

#include <json.hpp>

#include "tomo/common.hpp"

namespace tomo {

// Unit disk domain with a concentric support disk for the conformal factor.
// The annulus between them is a collar where the metric is exactly Euclidean.
struct DomainSpec {
  double outer_radius = 1.0;
  double inner_radius = 0.7;

  double boundary_gap() const { return outer_radius - inner_radius; }

  void validate() const {
    if (!(outer_radius == 1.0))
      throw ValidationError("domain outer_radius must be 1.0 (unit disk)");
    if (!(inner_radius > 0.0) || !(inner_radius < outer_radius))
      throw ValidationError("domain inner_radius must lie in (0, outer_radius)");
    if (!(boundary_gap() > 0.0))
      throw ValidationError("domain boundary gap must be positive");
  }

  bool operator==(const DomainSpec& o) const {
    return outer_radius == o.outer_radius && inner_radius == o.inner_radius;
  }

  nlohmann::json to_json() const {
    return {{"outer_radius", outer_radius}, {"inner_radius", inner_radius}};
  }

  static DomainSpec from_json(const nlohmann::json& j) {
    DomainSpec d;
    if (!j.is_object()) throw ConfigError("domain must be a JSON object");
    d.outer_radius = j.value("outer_radius", 1.0);
    d.inner_radius = j.value("inner_radius", 0.7);
    d.validate();
    return d;
  }
};

}  // namespace tomo
