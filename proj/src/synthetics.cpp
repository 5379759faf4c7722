#include "aeromag/synthetics.hpp"

#include <cmath>
#include <numbers>

namespace aeromag {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

struct Vec3 {
  double x, y, z;
};

Vec3 direction(double inclination_deg, double declination_deg) {
  const double i = inclination_deg * kDegToRad;
  const double d = declination_deg * kDegToRad;
  return {std::cos(i) * std::sin(d), std::cos(i) * std::cos(d), std::sin(i)};
}

}  // namespace

void HomogeneousSource::validate() const {
  if (!(z0 > 0.0)) throw ConfigError("homogeneous source: z0 must be > 0");
  if (!(si > 0.0)) throw ConfigError("homogeneous source: si must be > 0");
}

void DipoleSource::validate() const {
  if (!(z0 > 0.0)) throw ConfigError("dipole source: z0 must be > 0");
  if (inclination < -90.0 || inclination > 90.0)
    throw ConfigError("dipole source: inclination must be in [-90, 90]");
  if (declination < 0.0 || declination >= 360.0)
    throw ConfigError("dipole source: declination must be in [0, 360)");
}

Grid synth_homogeneous(const HomogeneousSource& source, const GridGeoref& georef) {
  source.validate();
  georef.validate();
  Grid grid(georef);
#pragma omp parallel for schedule(static)
  for (std::int64_t row = 0; row < georef.n_rows; ++row) {
    const double dy = georef.cell_y(static_cast<int>(row)) - source.y0;
    for (int col = 0; col < georef.n_cols; ++col) {
      const double dx = georef.cell_x(col) - source.x0;
      const double r2 = dx * dx + dy * dy + source.z0 * source.z0;
      grid.at(static_cast<int>(row), col) =
          source.base + source.amplitude * std::pow(r2, -0.5 * source.si);
    }
  }
  return grid;
}

FieldWithGradients synth_homogeneous_with_gradients(const HomogeneousSource& source,
                                                    const GridGeoref& georef) {
  source.validate();
  georef.validate();
  FieldWithGradients f{Grid(georef), Grid(georef), Grid(georef), Grid(georef)};
  f.tx.units_label = f.ty.units_label = f.tz.units_label = "nT/m";
  const double n = source.si;
#pragma omp parallel for schedule(static)
  for (std::int64_t row = 0; row < georef.n_rows; ++row) {
    const double dy = georef.cell_y(static_cast<int>(row)) - source.y0;
    for (int col = 0; col < georef.n_cols; ++col) {
      const double dx = georef.cell_x(col) - source.x0;
      const double r2 = dx * dx + dy * dy + source.z0 * source.z0;
      const double core = source.amplitude * std::pow(r2, -0.5 * (n + 2.0));
      f.t.at(static_cast<int>(row), col) = source.base + core * r2;
      f.tx.at(static_cast<int>(row), col) = -n * dx * core;
      f.ty.at(static_cast<int>(row), col) = -n * dy * core;
      f.tz.at(static_cast<int>(row), col) = n * source.z0 * core;
    }
  }
  return f;
}

Grid synth_dipole(const DipoleSource& source, const GridGeoref& georef,
                  double field_inclination, double field_declination) {
  source.validate();
  georef.validate();
  const Vec3 fhat = direction(field_inclination, field_declination);
  const Vec3 mhat = direction(source.inclination, source.declination);
  // mu0 / (4 pi) in nT * m^3 / (A * m^2)
  const double c = 100.0 * source.moment;

  Grid grid(georef);
#pragma omp parallel for schedule(static)
  for (std::int64_t row = 0; row < georef.n_rows; ++row) {
    const double dy = georef.cell_y(static_cast<int>(row)) - source.y0;
    for (int col = 0; col < georef.n_cols; ++col) {
      const double dx = georef.cell_x(col) - source.x0;
      const double dz = -source.z0;  // observation above the source, z down
      const double r = std::sqrt(dx * dx + dy * dy + dz * dz);
      const double rx = dx / r, ry = dy / r, rz = dz / r;
      const double mdotr = mhat.x * rx + mhat.y * ry + mhat.z * rz;
      const double bx = c * (3.0 * mdotr * rx - mhat.x) / (r * r * r);
      const double by = c * (3.0 * mdotr * ry - mhat.y) / (r * r * r);
      const double bz = c * (3.0 * mdotr * rz - mhat.z) / (r * r * r);
      grid.at(static_cast<int>(row), col) = fhat.x * bx + fhat.y * by + fhat.z * bz;
    }
  }
  return grid;
}

Grid add_noise(const Grid& grid, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw ConfigError("add_noise: sigma must be >= 0");
  Grid out = grid;
  if (sigma == 0.0) return out;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(out.size()); ++i) {
    if (out.nodata[static_cast<std::size_t>(i)]) continue;
    out.values[static_cast<std::size_t>(i)] +=
        sigma * counter_gaussian(seed, static_cast<std::uint64_t>(i));
  }
  return out;
}

}  // namespace aeromag
