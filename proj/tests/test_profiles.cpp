#include <doctest.h>

#include <slqheat/errors.hpp>
#include <slqheat/profiles.hpp>

#include "support/checks.hpp"

#include <cmath>

using namespace slqheat;
using checks::kPi;

TEST_CASE("profile catalog values") {
  const double x = 0.3;

  Profile zero;  // defaults to the zero profile
  CHECK(profile_is_zero(zero));
  CHECK(profile_slice(zero, 0.7, 1.0)(x) == 0.0);

  const Profile sine{"sine", {2.0, 3.0}};
  CHECK(profile_slice(sine, 0.0, 1.0)(x) ==
        doctest::Approx(2.0 * std::sin(3.0 * kPi * x)).epsilon(1e-15));
  CHECK_FALSE(profile_is_zero(sine));

  // Defaults: amplitude 1, first mode.
  const Profile plain{"sine", {}};
  CHECK(profile_slice(plain, 0.0, 1.0)(x) ==
        doctest::Approx(std::sin(kPi * x)).epsilon(1e-15));

  const Profile dec{"decaying_sine", {1.0, 1.0, 2.0}};
  CHECK(profile_slice(dec, 0.5, 1.0)(x) ==
        doctest::Approx(std::exp(-1.0) * std::sin(kPi * x)).epsilon(1e-14));

  const Profile grow{"growing_sine", {1.5, 1.0, 1.0}};
  CHECK(profile_slice(grow, 2.0, 1.0)(x) ==
        doctest::Approx(4.5 * std::sin(kPi * x)).epsilon(1e-14));

  const Profile poly{"poly", {1.0, 2.0, 3.0}};
  CHECK(profile_slice(poly, 0.0, 1.0)(x) ==
        doctest::Approx(1.0 + 2.0 * x + 3.0 * x * x).epsilon(1e-15));

  // The length parameter rescales the mode.
  const Profile stretched{"sine", {1.0, 1.0}};
  CHECK(profile_slice(stretched, 0.0, 2.0)(1.0) ==
        doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("unknown profile kinds are rejected") {
  const Profile bad{"sawtooth", {}};
  CHECK_THROWS_AS(profile_slice(bad, 0.0, 1.0), ConfigError);
  CHECK_THROWS_AS(profile_is_zero(bad), ConfigError);
}
