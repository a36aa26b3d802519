#pragma once

#include <array>
#include <cmath>

namespace lsfem {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(const Vec2& o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr Vec2& operator*=(double s) {
    x *= s;
    y *= s;
    return *this;
  }
};

using Point = Vec2;

constexpr Vec2 operator+(Vec2 a, const Vec2& b) { return a += b; }
constexpr Vec2 operator-(Vec2 a, const Vec2& b) { return a -= b; }
constexpr Vec2 operator-(const Vec2& a) { return {-a.x, -a.y}; }
constexpr Vec2 operator*(double s, Vec2 a) { return a *= s; }
constexpr Vec2 operator*(Vec2 a, double s) { return a *= s; }
constexpr double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
/// z-component of the 2D cross product.
constexpr double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }
/// Counterclockwise quarter turn: (a, b) -> (-b, a).
constexpr Vec2 rotate_ccw(const Vec2& a) { return {-a.y, a.x}; }
/// Clockwise quarter turn: (a, b) -> (b, -a).
constexpr Vec2 rotate_cw(const Vec2& a) { return {a.y, -a.x}; }

/// Row-major 2x2 matrix.
struct Mat2 {
  double a11 = 0.0, a12 = 0.0, a21 = 0.0, a22 = 0.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 scalar(double s) { return {s, 0.0, 0.0, s}; }

  constexpr double det() const { return a11 * a22 - a12 * a21; }
  constexpr Mat2 transposed() const { return {a11, a21, a12, a22}; }
  constexpr Mat2 inverse() const {
    const double d = det();
    return {a22 / d, -a12 / d, -a21 / d, a11 / d};
  }
  constexpr Vec2 operator*(const Vec2& v) const { return {a11 * v.x + a12 * v.y, a21 * v.x + a22 * v.y}; }
  constexpr Mat2& operator+=(const Mat2& o) {
    a11 += o.a11;
    a12 += o.a12;
    a21 += o.a21;
    a22 += o.a22;
    return *this;
  }
  constexpr Mat2& operator*=(double s) {
    a11 *= s;
    a12 *= s;
    a21 *= s;
    a22 *= s;
    return *this;
  }
};

constexpr Mat2 operator+(Mat2 a, const Mat2& b) { return a += b; }
constexpr Mat2 operator-(Mat2 a, const Mat2& b) {
  return {a.a11 - b.a11, a.a12 - b.a12, a.a21 - b.a21, a.a22 - b.a22};
}
constexpr Mat2 operator*(double s, Mat2 a) { return a *= s; }

/// Quadratic form a^T M b.
constexpr double bilinear(const Vec2& a, const Mat2& m, const Vec2& b) { return dot(a, m * b); }

/// Eigenvalues (ascending) of the symmetric part.
inline std::array<double, 2> sym_eigenvalues(const Mat2& m) {
  const double off = 0.5 * (m.a12 + m.a21);
  const double mean = 0.5 * (m.a11 + m.a22);
  const double rad = std::hypot(0.5 * (m.a11 - m.a22), off);
  return {mean - rad, mean + rad};
}

/// Barycentric coordinates (lambda_0, lambda_1, lambda_2).
using Bary = std::array<double, 3>;

}  // namespace lsfem
