#pragma once

#include <array>
#include <utility>
#include <vector>

namespace burrow {

// One magnetometer reading, microtesla.
struct FieldSample {
  double bx = 0.0;
  double by = 0.0;
  double bz = 0.0;

  friend bool operator==(const FieldSample&, const FieldSample&) = default;
};

// Test-bed magnet array: a rectangular grid of identical bar magnets, all
// magnetized +z, centered on the origin in the z=0 plane. Each magnet is
// modeled as a point dipole at its center.
struct MagnetArrayConfig {
  double pitch_x_mm = 29.0;    // horizontal spacing d1
  double pitch_y_mm = 23.0;    // vertical spacing d2
  double extent_x_mm = 1828.8; // array footprint (matches the bin floor)
  double extent_y_mm = 914.4;
  std::array<double, 3> magnet_dims_mm{60.0, 10.0, 3.0};  // recorded, not modeled
  double moment_am2 = 0.0;     // per-magnet dipole moment; 0 = use default_moment()
  FieldSample ambient_ut{};    // constant offset, e.g. Earth's field; zero by default

  int count_x() const;
  int count_y() const;
  double moment() const;       // moment_am2, or the calibrated default when 0
  void validate() const;
};

// Fitted height model H = k / ||B||, H in millimeters, ||B|| in microtesla.
struct CalibrationCurve {
  double k_ut_mm = 8333.0;

  void validate() const;
};

// Point-dipole superposition over the whole grid. point is (x,y,z) in mm with
// z > 0 strictly above the array plane.
FieldSample field_at(const MagnetArrayConfig& array, const std::array<double, 3>& point_mm);

// Field of a single point dipole (moment m_am2 along +z at dipole_mm), for
// callers composing their own layouts.
FieldSample dipole_field(double moment_am2, const std::array<double, 3>& dipole_mm,
                         const std::array<double, 3>& point_mm);

double net_magnitude(const FieldSample& s);

// H = k / ||B||; rejects mag <= 0 (sensor fault / out of range).
double height_from_field(const CalibrationCurve& curve, double magnitude_ut);

// Least squares fit of k over samples (height_mm, magnitude_ut):
// k = sum(H_j / mag_j) / sum(1 / mag_j^2).
CalibrationCurve fit_calibration(const std::vector<std::pair<double, double>>& samples);

// Per-magnet moment that makes ||B|| at 100 mm above the array center equal
// 83.33 uT, i.e. consistent with the default curve k = 8333 at that anchor.
double default_moment(const MagnetArrayConfig& array);

}  // namespace burrow
