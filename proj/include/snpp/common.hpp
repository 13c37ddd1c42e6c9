#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace snpp {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  constexpr Vec2(double x_, double y_) : x(x_), y(y_) {}

  constexpr Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  constexpr double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
};

constexpr Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// Symmetric-or-general 2x2 tensor, row-major.
struct Tensor2 {
  std::array<double, 4> a{1.0, 0.0, 0.0, 1.0};

  static constexpr Tensor2 identity() { return {}; }
  static constexpr Tensor2 scalar(double s) { return Tensor2{{s, 0.0, 0.0, s}}; }

  constexpr double operator()(int i, int j) const { return a[2 * i + j]; }
  constexpr double& operator()(int i, int j) { return a[2 * i + j]; }
  constexpr Vec2 apply(const Vec2& v) const {
    return {a[0] * v.x + a[1] * v.y, a[2] * v.x + a[3] * v.y};
  }
  constexpr Tensor2 operator*(double s) const {
    return Tensor2{{a[0] * s, a[1] * s, a[2] * s, a[3] * s}};
  }
  constexpr double trace() const { return a[0] + a[3]; }
  constexpr double det() const { return a[0] * a[3] - a[1] * a[2]; }

  /// Eigenvalues of the symmetric part, ascending.
  std::array<double, 2> sym_eigenvalues() const {
    const double off = 0.5 * (a[1] + a[2]);
    const double mean = 0.5 * (a[0] + a[3]);
    const double rad = std::hypot(0.5 * (a[0] - a[3]), off);
    return {mean - rad, mean + rad};
  }
};

enum class ErrorCode {
  InclusionTouchesBoundary,
  MeshGenerationFailure,
  ResolutionTooCoarse,
  DegenerateElement,
  FieldMeshMismatch,
  InconsistentConstraint,
  SolverBreakdown,
  MaxIterationsExceeded,
  NoSolidPhase,
  FormulaMismatch,
  PointOutsideFluidPart,
  InadmissibleScaling,
  IncompatibleSource,
  FixedPointDivergence,
  GridMisaligned,
  MalformedDiagnostics,
  ParseError,
  ValidationError,
  InvalidArgument,
  IoError,
};

const char* to_string(ErrorCode code);

/// All library failures are reported through this type. `where` names the
/// originating module and operation, e.g. "fem::solve_spd".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string where, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  const std::string& where() const noexcept { return where_; }

 private:
  ErrorCode code_;
  std::string where_;
};

inline constexpr double kPi = 3.14159265358979323846;

}  // namespace snpp
