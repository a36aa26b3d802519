#include "lsfem/quadrature.hpp"

#include <cmath>

#include "lsfem/errors.hpp"

namespace lsfem {

namespace {

// Dunavant rules; weights below are normalized to the unit-area triangle and
// halved when added.
void add_orbit_centroid(TriangleRule& r, double w) {
  r.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  r.weights.push_back(0.5 * w);
}

void add_orbit_3(TriangleRule& r, double a, double w) {
  const double b = 1.0 - 2.0 * a;
  r.points.push_back({a, a, b});
  r.points.push_back({a, b, a});
  r.points.push_back({b, a, a});
  for (int i = 0; i < 3; ++i) r.weights.push_back(0.5 * w);
}

void add_orbit_6(TriangleRule& r, double a, double b, double w) {
  const double c = 1.0 - a - b;
  r.points.push_back({a, b, c});
  r.points.push_back({a, c, b});
  r.points.push_back({b, a, c});
  r.points.push_back({b, c, a});
  r.points.push_back({c, a, b});
  r.points.push_back({c, b, a});
  for (int i = 0; i < 6; ++i) r.weights.push_back(0.5 * w);
}

TriangleRule make_rule(int degree) {
  TriangleRule r;
  r.degree = degree;
  switch (degree) {
    case 1:
      add_orbit_centroid(r, 1.0);
      break;
    case 2:
      add_orbit_3(r, 1.0 / 6.0, 1.0 / 3.0);
      break;
    case 4:
      add_orbit_3(r, 0.445948490915965, 0.223381589678011);
      add_orbit_3(r, 0.091576213509771, 0.109951743655322);
      break;
    case 6:
      add_orbit_3(r, 0.249286745170910, 0.116786275726379);
      add_orbit_3(r, 0.063089014491502, 0.050844906370207);
      add_orbit_6(r, 0.053145049844817, 0.310352451033784, 0.082851075618374);
      break;
    default:
      break;
  }
  // renormalize so the weights sum to exactly 1/2 despite the 15-digit tables
  double sum = 0.0;
  for (double w : r.weights) sum += w;
  for (double& w : r.weights) w *= 0.5 / sum;
  return r;
}

EdgeRule make_edge_rule(int npoints) {
  EdgeRule r;
  if (npoints == 2) {
    const double d = 0.5 / std::sqrt(3.0);
    r.degree = 3;
    r.points = {0.5 - d, 0.5 + d};
    r.weights = {0.5, 0.5};
  } else {
    const double d = 0.5 * std::sqrt(0.6);
    r.degree = 5;
    r.points = {0.5 - d, 0.5, 0.5 + d};
    r.weights = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
  }
  return r;
}

}  // namespace

const TriangleRule& triangle_rule(int degree) {
  static const TriangleRule r1 = make_rule(1);
  static const TriangleRule r2 = make_rule(2);
  static const TriangleRule r4 = make_rule(4);
  static const TriangleRule r6 = make_rule(6);
  switch (degree) {
    case 1:
      return r1;
    case 2:
      return r2;
    case 4:
      return r4;
    case 6:
      return r6;
    default:
      throw InvalidArgument("triangle_rule: unsupported degree " + std::to_string(degree));
  }
}

const EdgeRule& edge_rule(int npoints) {
  static const EdgeRule e2 = make_edge_rule(2);
  static const EdgeRule e3 = make_edge_rule(3);
  switch (npoints) {
    case 2:
      return e2;
    case 3:
      return e3;
    default:
      throw InvalidArgument("edge_rule: unsupported point count " + std::to_string(npoints));
  }
}

}  // namespace lsfem
