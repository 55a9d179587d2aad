#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "burrow/magnetics.hpp"
#include "burrow/rng.hpp"

using namespace burrow;

namespace {

MagnetArrayConfig single_dipole(double moment) {
  MagnetArrayConfig a;
  a.pitch_x_mm = 1000.0;
  a.pitch_y_mm = 1000.0;
  a.extent_x_mm = 500.0;  // floor(500/1000)+1 = 1 magnet
  a.extent_y_mm = 500.0;
  a.moment_am2 = moment;
  return a;
}

}  // namespace

TEST_CASE("single dipole on axis: lateral components vanish, bz positive") {
  auto a = single_dipole(2.0);
  REQUIRE(a.count_x() == 1);
  REQUIRE(a.count_y() == 1);
  FieldSample f = field_at(a, {0.0, 0.0, 150.0});
  CHECK(f.bx == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(f.by == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(f.bz > 0.0);
}

TEST_CASE("single dipole on axis matches the closed form mu0 m / (2 pi z^3)") {
  // closed form in microtesla with z in mm: 2e8 * m / z^3
  auto a = single_dipole(1.7);
  for (double z : {30.0, 100.0, 250.0, 400.0}) {
    double expected = 2e8 * 1.7 / (z * z * z);
    FieldSample f = field_at(a, {0.0, 0.0, z});
    CHECK(f.bz == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("superposition: two-magnet array equals the sum of single evaluations") {
  MagnetArrayConfig two;
  two.pitch_x_mm = 29.0;
  two.pitch_y_mm = 1000.0;
  two.extent_x_mm = 29.0;  // 2 x 1 grid at x = -14.5, +14.5
  two.extent_y_mm = 500.0;
  two.moment_am2 = 1.3;
  REQUIRE(two.count_x() == 2);
  REQUIRE(two.count_y() == 1);

  std::array<double, 3> probe{37.0, -12.0, 80.0};
  FieldSample sum = field_at(two, probe);
  FieldSample left = dipole_field(1.3, {-14.5, 0.0, 0.0}, probe);
  FieldSample right = dipole_field(1.3, {14.5, 0.0, 0.0}, probe);
  CHECK(sum.bx == doctest::Approx(left.bx + right.bx).epsilon(1e-12));
  CHECK(sum.by == doctest::Approx(left.by + right.by).epsilon(1e-12));
  CHECK(sum.bz == doctest::Approx(left.bz + right.bz).epsilon(1e-12));
}

TEST_CASE("field is linear in the moment") {
  auto a1 = single_dipole(1.0);
  auto a3 = single_dipole(3.0);
  std::array<double, 3> probe{25.0, 40.0, 60.0};
  FieldSample f1 = field_at(a1, probe);
  FieldSample f3 = field_at(a3, probe);
  CHECK(f3.bx == doctest::Approx(3.0 * f1.bx).epsilon(1e-12));
  CHECK(f3.by == doctest::Approx(3.0 * f1.by).epsilon(1e-12));
  CHECK(f3.bz == doctest::Approx(3.0 * f1.bz).epsilon(1e-12));
}

TEST_CASE("above the center of the default array the field is axial") {
  MagnetArrayConfig a;  // paper geometry
  a.moment_am2 = 1.0;
  REQUIRE(a.count_x() == 64);
  REQUIRE(a.count_y() == 40);
  FieldSample f = field_at(a, {0.0, 0.0, 100.0});
  double mag = net_magnitude(f);
  CHECK(std::abs(f.bx) < 1e-9 * mag);
  CHECK(std::abs(f.by) < 1e-9 * mag);
}

TEST_CASE("field_at rejects points at or below the array plane") {
  auto a = single_dipole(1.0);
  CHECK_THROWS_AS(field_at(a, {0.0, 0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(field_at(a, {0.0, 0.0, -5.0}), std::invalid_argument);
}

TEST_CASE("net_magnitude basics") {
  CHECK(net_magnitude({3.0, 4.0, 12.0}) == doctest::Approx(13.0).epsilon(1e-15));
  CHECK(net_magnitude({0.0, 0.0, 0.0}) == 0.0);
  CHECK(net_magnitude({-5.0, 0.0, 0.0}) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK_THROWS_AS(net_magnitude({std::nan(""), 0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("height_from_field inverts the curve") {
  CalibrationCurve c;  // k = 8333
  CHECK(height_from_field(c, 83.33) == doctest::Approx(100.0).epsilon(1e-4));
  CHECK(height_from_field(c, 8333.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(height_from_field(c, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(height_from_field(c, -2.0), std::invalid_argument);

  // algebraic inverse: H -> k/H -> H
  for (double h : {7.0, 55.0, 133.0, 420.0})
    CHECK(height_from_field(c, c.k_ut_mm / h) == doctest::Approx(h).epsilon(1e-12));
}

TEST_CASE("fit_calibration recovers k from noiseless synthetic data") {
  const double k = 8333.0;
  std::vector<std::pair<double, double>> samples;
  for (int i = 0; i < 50; ++i) {
    double h = 20.0 + 8.0 * i;
    samples.emplace_back(h, k / h);
  }
  CalibrationCurve fit = fit_calibration(samples);
  CHECK(std::abs(fit.k_ut_mm - k) / k < 1e-9);
}

TEST_CASE("fit_calibration: single sample") {
  CalibrationCurve fit = fit_calibration({{100.0, 83.33}});
  CHECK(fit.k_ut_mm == doctest::Approx(8333.0).epsilon(1e-12));
}

TEST_CASE("fit_calibration within 2% under 1% multiplicative noise") {
  const double k = 8333.0;
  Rng rng(2024);
  std::vector<std::pair<double, double>> samples;
  for (int i = 0; i < 200; ++i) {
    double h = rng.uniform(20.0, 450.0);
    double mag = (k / h) * (1.0 + rng.normal(0.0, 0.01));
    samples.emplace_back(h, mag);
  }
  CalibrationCurve fit = fit_calibration(samples);
  CHECK(std::abs(fit.k_ut_mm - k) / k < 0.02);
}

TEST_CASE("fit_calibration input validation") {
  CHECK_THROWS_AS(fit_calibration({}), std::invalid_argument);
  CHECK_THROWS_AS(fit_calibration({{100.0, 0.0}}), std::invalid_argument);
  CHECK_THROWS_AS(fit_calibration({{100.0, -3.0}}), std::invalid_argument);
}

TEST_CASE("default moment anchors the array to the curve at 100 mm") {
  MagnetArrayConfig a;  // moment_am2 = 0 -> calibrated default
  MagnetArrayConfig resolved = a;
  resolved.moment_am2 = a.moment();
  CHECK(resolved.moment_am2 > 0.0);
  double mag = net_magnitude(field_at(resolved, {0.0, 0.0, 100.0}));
  CHECK(mag == doctest::Approx(83.33).epsilon(1e-9));
}

TEST_CASE("ambient offset adds to the dipole sum") {
  auto a = single_dipole(1.0);
  FieldSample base = field_at(a, {10.0, 20.0, 90.0});
  a.ambient_ut = {5.0, -2.0, 1.0};
  FieldSample shifted = field_at(a, {10.0, 20.0, 90.0});
  CHECK(shifted.bx == doctest::Approx(base.bx + 5.0).epsilon(1e-12));
  CHECK(shifted.by == doctest::Approx(base.by - 2.0).epsilon(1e-12));
  CHECK(shifted.bz == doctest::Approx(base.bz + 1.0).epsilon(1e-12));
}
