#include <slqheat/profiles.hpp>

#include <slqheat/errors.hpp>

#include <cmath>

namespace slqheat {

namespace {

double coeff(const Profile& p, std::size_t k, double fallback) {
  return k < p.coeffs.size() ? p.coeffs[k] : fallback;
}

}  // namespace

SpaceFn profile_slice(const Profile& profile, double t, double length) {
  const double pi = std::acos(-1.0);
  if (profile.kind == "zero") {
    return [](double) { return 0.0; };
  }
  if (profile.kind == "sine" || profile.kind == "decaying_sine" ||
      profile.kind == "growing_sine") {
    const double amp = coeff(profile, 0, 1.0);
    const double mode = coeff(profile, 1, 1.0);
    double scale = amp;
    if (profile.kind == "decaying_sine") {
      scale *= std::exp(-coeff(profile, 2, 1.0) * t);
    } else if (profile.kind == "growing_sine") {
      scale *= 1.0 + coeff(profile, 2, 1.0) * t;
    }
    const double wave = mode * pi / length;
    return [scale, wave](double x) { return scale * std::sin(wave * x); };
  }
  if (profile.kind == "poly") {
    const std::vector<double> c = profile.coeffs;
    return [c](double x) {
      double acc = 0.0;
      for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
      return acc;
    };
  }
  throw ConfigError("unknown profile kind '" + profile.kind + "'");
}

bool profile_is_zero(const Profile& profile) {
  if (profile.kind == "zero") return true;
  if (profile.kind == "poly") {
    for (double c : profile.coeffs) {
      if (c != 0.0) return false;
    }
    return true;
  }
  if (profile.kind == "sine" || profile.kind == "decaying_sine" ||
      profile.kind == "growing_sine") {
    return false;
  }
  throw ConfigError("unknown profile kind '" + profile.kind + "'");
}

}  // namespace slqheat
