#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace scoutsim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec3f = Eigen::Vector3f;

/// Error categories surfaced through the C API as exit/status codes.
enum class ErrorKind { Config, Io, Runtime, Invalid };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error config_error(std::string msg) { return Error(ErrorKind::Config, std::move(msg)); }
inline Error io_error(std::string msg) { return Error(ErrorKind::Io, std::move(msg)); }
inline Error runtime_error_(std::string msg) { return Error(ErrorKind::Runtime, std::move(msg)); }
inline Error invalid_error(std::string msg) { return Error(ErrorKind::Invalid, std::move(msg)); }

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Wrap an angle to [-pi, pi).
inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, kTwoPi);
  if (a < 0) a += kTwoPi;
  return a - kPi;
}

struct Rect {
  double xmin = 0, ymin = 0, xmax = 0, ymax = 0;
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  bool contains(const Vec2& p) const {
    return p.x() >= xmin && p.x() <= xmax && p.y() >= ymin && p.y() <= ymax;
  }
};

}  // namespace scoutsim
