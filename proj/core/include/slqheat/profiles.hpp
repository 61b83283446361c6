#pragma once
// Named analytic space-time profiles for problem data, referenced from
// configuration files by name plus coefficient list so experiment configs
// stay self-contained. At a fixed time each profile yields a function of x
// ready for projection onto the FEM spaces.

#include <slqheat/mesh_fem.hpp>

#include <string>
#include <vector>

namespace slqheat {

// Catalog (c = coefficients, all optional with the defaults shown):
//   zero                                    0
//   sine          c0 sin(c1 pi x / L)       c0 = 1, c1 = 1
//   decaying_sine c0 exp(-c2 t) sin(c1 pi x / L)   c2 = 1
//   growing_sine  c0 (1 + c2 t) sin(c1 pi x / L)   c2 = 1
//   poly          sum_k c_k x^k             c = {0}
struct Profile {
  std::string kind = "zero";
  std::vector<double> coeffs;
};

// Validates the kind (throws) and returns the space slice at time t.
SpaceFn profile_slice(const Profile& profile, double t, double length);

// True if the profile is identically zero (lets callers skip work).
bool profile_is_zero(const Profile& profile);

}  // namespace slqheat
