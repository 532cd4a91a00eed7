#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

namespace rna {

inline constexpr double pi = std::numbers::pi;
inline constexpr double inv_pi = 1.0 / std::numbers::pi;
inline constexpr double inf = std::numeric_limits<double>::infinity();

struct Vec3 {
  double x = 0, y = 0, z = 0;

  constexpr Vec3() = default;
  constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}
  constexpr explicit Vec3(double s) : x(s), y(s), z(s) {}

  constexpr double& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
  constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
  constexpr Vec3& operator*=(const Vec3& o) { x *= o.x; y *= o.y; z *= o.z; return *this; }
  constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
  constexpr Vec3& operator/=(double s) { x /= s; y /= s; z /= s; return *this; }

  friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator*(Vec3 a, const Vec3& b) { return a *= b; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator/(Vec3 a, double s) { return a /= s; }
constexpr Vec3 operator/(const Vec3& a, const Vec3& b) { return {a.x / b.x, a.y / b.y, a.z / b.z}; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double length(const Vec3& a) { return std::sqrt(dot(a, a)); }
constexpr double length_squared(const Vec3& a) { return dot(a, a); }
inline Vec3 normalize(const Vec3& a) {
  auto l = length(a);
  return l > 0 ? a / l : a;
}
constexpr Vec3 min(const Vec3& a, const Vec3& b) {
  return {std::min(a.x, b.x), std::min(a.y, b.y), std::min(a.z, b.z)};
}
constexpr Vec3 max(const Vec3& a, const Vec3& b) {
  return {std::max(a.x, b.x), std::max(a.y, b.y), std::max(a.z, b.z)};
}
constexpr double max_component(const Vec3& a) { return std::max({a.x, a.y, a.z}); }
constexpr double mean(const Vec3& a) { return (a.x + a.y + a.z) / 3.0; }
inline bool isfinite(const Vec3& a) {
  return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}
constexpr Vec3 reflect(const Vec3& w, const Vec3& n) { return 2.0 * dot(w, n) * n - w; }

// RGB values share the vector type; channels map to x, y, z.
using Rgb = Vec3;

constexpr double luminance(const Rgb& c) { return 0.2126 * c.x + 0.7152 * c.y + 0.0722 * c.z; }

// Orthonormal frame; `z` is the normal (or fiber tangent).
struct Frame {
  Vec3 x{1, 0, 0}, y{0, 1, 0}, z{0, 0, 1};

  Vec3 to_local(const Vec3& v) const { return {dot(v, x), dot(v, y), dot(v, z)}; }
  Vec3 to_world(const Vec3& v) const { return x * v.x + y * v.y + z * v.z; }
};

// Duff et al. branchless orthonormal basis.
inline Frame frame_from_z(const Vec3& n) {
  auto sign = std::copysign(1.0, n.z);
  auto a = -1.0 / (sign + n.z);
  auto b = n.x * n.y * a;
  Frame f;
  f.x = {1.0 + sign * n.x * n.x * a, sign * b, -sign * n.x};
  f.y = {b, sign + n.y * n.y * a, -n.y};
  f.z = n;
  return f;
}

struct Bounds3 {
  Vec3 min{inf, inf, inf};
  Vec3 max{-inf, -inf, -inf};

  void expand(const Vec3& p) {
    min = rna::min(min, p);
    max = rna::max(max, p);
  }
  void expand(const Bounds3& b) {
    min = rna::min(min, b.min);
    max = rna::max(max, b.max);
  }
  bool empty() const { return min.x > max.x || min.y > max.y || min.z > max.z; }
  Vec3 center() const { return (min + max) * 0.5; }
  Vec3 extent() const { return max - min; }
  double diagonal() const { return empty() ? 0.0 : length(max - min); }
  double surface_area() const {
    if (empty()) return 0;
    auto e = extent();
    return 2 * (e.x * e.y + e.y * e.z + e.z * e.x);
  }
  bool contains(const Vec3& p, double eps = 0) const {
    return p.x >= min.x - eps && p.y >= min.y - eps && p.z >= min.z - eps && p.x <= max.x + eps &&
           p.y <= max.y + eps && p.z <= max.z + eps;
  }
};

// Affine transform stored as a 3x3 linear part plus translation. Points map
// as p' = linear * p + translation (column-vector convention).
struct Affine {
  std::array<double, 9> linear{1, 0, 0, 0, 1, 0, 0, 0, 1};  // row-major
  Vec3 translation{};

  Vec3 apply_linear(const Vec3& v) const {
    const auto& m = linear;
    return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
            m[6] * v.x + m[7] * v.y + m[8] * v.z};
  }
  // Multiplies by the transpose of the linear part.
  Vec3 apply_linear_transposed(const Vec3& v) const {
    const auto& m = linear;
    return {m[0] * v.x + m[3] * v.y + m[6] * v.z, m[1] * v.x + m[4] * v.y + m[7] * v.z,
            m[2] * v.x + m[5] * v.y + m[8] * v.z};
  }
  Vec3 apply_point(const Vec3& p) const { return apply_linear(p) + translation; }

  double determinant() const {
    const auto& m = linear;
    return m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6]) +
           m[2] * (m[3] * m[7] - m[4] * m[6]);
  }
  bool is_identity() const {
    return linear == std::array<double, 9>{1, 0, 0, 0, 1, 0, 0, 0, 1} && translation == Vec3{};
  }
};

// Caller guarantees the transform is invertible.
inline Affine inverse(const Affine& a) {
  const auto& m = a.linear;
  auto det = a.determinant();
  auto id = 1.0 / det;
  Affine r;
  r.linear = {(m[4] * m[8] - m[5] * m[7]) * id, (m[2] * m[7] - m[1] * m[8]) * id,
              (m[1] * m[5] - m[2] * m[4]) * id, (m[5] * m[6] - m[3] * m[8]) * id,
              (m[0] * m[8] - m[2] * m[6]) * id, (m[2] * m[3] - m[0] * m[5]) * id,
              (m[3] * m[7] - m[4] * m[6]) * id, (m[1] * m[6] - m[0] * m[7]) * id,
              (m[0] * m[4] - m[1] * m[3]) * id};
  r.translation = -r.apply_linear(a.translation);
  return r;
}

inline Affine compose(const Affine& outer, const Affine& inner) {
  Affine r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += outer.linear[i * 3 + k] * inner.linear[k * 3 + j];
      r.linear[i * 3 + j] = s;
    }
  r.translation = outer.apply_point(inner.translation);
  return r;
}

inline Affine translation(const Vec3& t) {
  Affine a;
  a.translation = t;
  return a;
}

inline Affine scaling(double s) {
  Affine a;
  a.linear = {s, 0, 0, 0, s, 0, 0, 0, s};
  return a;
}

inline Affine rotation(const Vec3& axis, double angle) {
  auto u = normalize(axis);
  auto c = std::cos(angle), s = std::sin(angle), t = 1 - c;
  Affine a;
  a.linear = {t * u.x * u.x + c,       t * u.x * u.y - s * u.z, t * u.x * u.z + s * u.y,
              t * u.x * u.y + s * u.z, t * u.y * u.y + c,       t * u.y * u.z - s * u.x,
              t * u.x * u.z - s * u.y, t * u.y * u.z + s * u.x, t * u.z * u.z + c};
  return a;
}

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace rna
