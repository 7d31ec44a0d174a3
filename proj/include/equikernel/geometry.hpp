#ifndef EQUIKERNEL_GEOMETRY_HPP_
#define EQUIKERNEL_GEOMETRY_HPP_

#include <array>
#include <cmath>
#include <stdexcept>

#include "equikernel/rng.hpp"

namespace equikernel {

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    double n = norm();
    if (n == 0.0) throw std::domain_error("cannot normalize zero vector");
    return {x / n, y / n, z / n};
  }
};

struct Mat3 {
  // row-major
  std::array<double, 9> a{};

  double& operator()(int i, int j) { return a[static_cast<std::size_t>(3 * i + j)]; }
  double operator()(int i, int j) const { return a[static_cast<std::size_t>(3 * i + j)]; }

  static Mat3 identity() {
    Mat3 m;
    m(0, 0) = m(1, 1) = m(2, 2) = 1.0;
    return m;
  }

  Mat3 operator*(const Mat3& o) const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) s += (*this)(i, k) * o(k, j);
        r(i, j) = s;
      }
    return r;
  }

  Vec3 operator*(const Vec3& v) const {
    return {a[0] * v.x + a[1] * v.y + a[2] * v.z,
            a[3] * v.x + a[4] * v.y + a[5] * v.z,
            a[6] * v.x + a[7] * v.y + a[8] * v.z};
  }

  Mat3 transposed() const {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = (*this)(j, i);
    return r;
  }

  double det() const {
    return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
           a[2] * (a[3] * a[7] - a[4] * a[6]);
  }
};

// Proper rotation: orthogonal within 1e-12, det +1 within 1e-12.
class Rotation {
 public:
  static Rotation identity() { return Rotation(Mat3::identity(), true); }

  static Rotation from_matrix(const Mat3& m) {
    Mat3 g = m.transposed() * m;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double want = (i == j) ? 1.0 : 0.0;
        if (std::abs(g(i, j) - want) > 1e-12)
          throw std::domain_error("rotation matrix is not orthogonal within 1e-12");
      }
    if (std::abs(m.det() - 1.0) > 1e-12)
      throw std::domain_error("rotation matrix determinant is not +1 within 1e-12");
    return Rotation(m, true);
  }

  // Rodrigues formula; axis need not be normalized.
  static Rotation about_axis(const Vec3& axis, double angle) {
    Vec3 n = axis.normalized();
    double c = std::cos(angle), s = std::sin(angle), t = 1.0 - c;
    Mat3 m;
    m(0, 0) = c + n.x * n.x * t;
    m(0, 1) = n.x * n.y * t - n.z * s;
    m(0, 2) = n.x * n.z * t + n.y * s;
    m(1, 0) = n.y * n.x * t + n.z * s;
    m(1, 1) = c + n.y * n.y * t;
    m(1, 2) = n.y * n.z * t - n.x * s;
    m(2, 0) = n.z * n.x * t - n.y * s;
    m(2, 1) = n.z * n.y * t + n.x * s;
    m(2, 2) = c + n.z * n.z * t;
    return Rotation(m, true);
  }

  // Uniform random rotation from a normalized 4-gaussian quaternion.
  static Rotation random(Rng& rng) {
    double q0 = rng.gaussian(), q1 = rng.gaussian(), q2 = rng.gaussian(), q3 = rng.gaussian();
    double n = std::sqrt(q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3);
    q0 /= n; q1 /= n; q2 /= n; q3 /= n;
    Mat3 m;
    m(0, 0) = 1 - 2 * (q2 * q2 + q3 * q3);
    m(0, 1) = 2 * (q1 * q2 - q0 * q3);
    m(0, 2) = 2 * (q1 * q3 + q0 * q2);
    m(1, 0) = 2 * (q1 * q2 + q0 * q3);
    m(1, 1) = 1 - 2 * (q1 * q1 + q3 * q3);
    m(1, 2) = 2 * (q2 * q3 - q0 * q1);
    m(2, 0) = 2 * (q1 * q3 - q0 * q2);
    m(2, 1) = 2 * (q2 * q3 + q0 * q1);
    m(2, 2) = 1 - 2 * (q1 * q1 + q2 * q2);
    return Rotation(m, true);
  }

  const Mat3& matrix() const { return mat_; }
  Vec3 operator*(const Vec3& v) const { return mat_ * v; }
  Rotation operator*(const Rotation& o) const { return Rotation(mat_ * o.mat_, true); }
  Rotation inverse() const { return Rotation(mat_.transposed(), true); }

 private:
  Rotation(const Mat3& m, bool) : mat_(m) {}
  Mat3 mat_;
};

}  // namespace equikernel

#endif  // EQUIKERNEL_GEOMETRY_HPP_
