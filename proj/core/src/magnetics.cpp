#include "burrow/magnetics.hpp"

#include <cmath>
#include <stdexcept>

namespace burrow {

namespace {

// mu0/(4 pi) in (uT * mm^3) / (A * m^2): 1e-7 T*m/A * 1e6 uT/T * 1e9 mm^3/m^3
constexpr double kDipolePrefactor = 1e8;

constexpr double kAnchorHeightMm = 100.0;
constexpr double kAnchorFieldUt = 83.33;

}  // namespace

int MagnetArrayConfig::count_x() const {
  return static_cast<int>(std::floor(extent_x_mm / pitch_x_mm)) + 1;
}
int MagnetArrayConfig::count_y() const {
  return static_cast<int>(std::floor(extent_y_mm / pitch_y_mm)) + 1;
}

void MagnetArrayConfig::validate() const {
  if (!(pitch_x_mm > 0) || !(pitch_y_mm > 0))
    throw std::invalid_argument("MagnetArrayConfig: pitches must be > 0");
  if (!(extent_x_mm > 0) || !(extent_y_mm > 0))
    throw std::invalid_argument("MagnetArrayConfig: extent must be > 0");
  if (moment_am2 < 0) throw std::invalid_argument("MagnetArrayConfig: moment must be >= 0");
}

double MagnetArrayConfig::moment() const {
  if (moment_am2 > 0) return moment_am2;
  return default_moment(*this);
}

void CalibrationCurve::validate() const {
  if (!(k_ut_mm > 0)) throw std::invalid_argument("CalibrationCurve: k must be > 0");
}

FieldSample dipole_field(double moment_am2, const std::array<double, 3>& dipole_mm,
                         const std::array<double, 3>& point_mm) {
  double rx = point_mm[0] - dipole_mm[0];
  double ry = point_mm[1] - dipole_mm[1];
  double rz = point_mm[2] - dipole_mm[2];
  double r2 = rx * rx + ry * ry + rz * rz;
  double r = std::sqrt(r2);
  double r5 = r2 * r2 * r;
  // B = mu0/(4 pi) * (3 (m.r) r - m r^2) / r^5 with m = m ez
  double c = kDipolePrefactor * moment_am2 / r5;
  return {c * 3.0 * rz * rx, c * 3.0 * rz * ry, c * (3.0 * rz * rz - r2)};
}

FieldSample field_at(const MagnetArrayConfig& array, const std::array<double, 3>& point_mm) {
  array.validate();
  if (!(point_mm[2] > 0))
    throw std::invalid_argument("field_at: point must be strictly above the array plane");
  const int nx = array.count_x();
  const int ny = array.count_y();
  const double x0 = -0.5 * (nx - 1) * array.pitch_x_mm;
  const double y0 = -0.5 * (ny - 1) * array.pitch_y_mm;
  const double m = array.moment();
  FieldSample total = array.ambient_ut;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      FieldSample f = dipole_field(
          m, {x0 + i * array.pitch_x_mm, y0 + j * array.pitch_y_mm, 0.0}, point_mm);
      total.bx += f.bx;
      total.by += f.by;
      total.bz += f.bz;
    }
  }
  return total;
}

double net_magnitude(const FieldSample& s) {
  if (!std::isfinite(s.bx) || !std::isfinite(s.by) || !std::isfinite(s.bz))
    throw std::invalid_argument("net_magnitude: non-finite sample");
  return std::sqrt(s.bx * s.bx + s.by * s.by + s.bz * s.bz);
}

double height_from_field(const CalibrationCurve& curve, double magnitude_ut) {
  curve.validate();
  if (!(magnitude_ut > 0))
    throw std::invalid_argument("height_from_field: magnitude must be > 0");
  return curve.k_ut_mm / magnitude_ut;
}

CalibrationCurve fit_calibration(const std::vector<std::pair<double, double>>& samples) {
  if (samples.empty()) throw std::invalid_argument("fit_calibration: empty sample set");
  double num = 0.0, den = 0.0;
  for (const auto& [height_mm, mag_ut] : samples) {
    if (!(mag_ut > 0))
      throw std::invalid_argument("fit_calibration: magnitudes must be > 0");
    num += height_mm / mag_ut;
    den += 1.0 / (mag_ut * mag_ut);
  }
  return CalibrationCurve{num / den};
}

double default_moment(const MagnetArrayConfig& array) {
  // the field is linear in the moment, so the anchor condition solves directly
  MagnetArrayConfig unit = array;
  unit.moment_am2 = 1.0;
  unit.ambient_ut = {};
  double b_unit = net_magnitude(field_at(unit, {0.0, 0.0, kAnchorHeightMm}));
  return kAnchorFieldUt / b_unit;
}

}  // namespace burrow
