#pragma once

#include <cstdint>

#include "aeromag/geodata.hpp"

namespace aeromag {

// Point source with a homogeneous field of degree -si:
//   T(x, y) = base + amplitude * ((x-x0)^2 + (y-y0)^2 + z0^2)^(-si/2)
// The field satisfies the Euler homogeneity relation exactly with index si,
// for any si > 0, which makes fractional indices testable targets.
// Depths are positive down; the observation surface is z = 0.
struct HomogeneousSource {
  double x0 = 0.0;
  double y0 = 0.0;
  double z0 = 100.0;       // meters below surface
  double amplitude = 1.0;  // nT * m^si
  double si = 1.0;
  double base = 0.0;       // nT

  void validate() const;
};

// Point dipole; anomaly is the projection of the dipole induction onto the
// ambient-field direction. Inclination positive down, declination clockwise
// from north, axes x east / y north / z down.
struct DipoleSource {
  double x0 = 0.0;
  double y0 = 0.0;
  double z0 = 100.0;    // meters below surface
  double moment = 1.0;  // A * m^2
  double inclination = 90.0;
  double declination = 0.0;

  void validate() const;
};

struct FieldWithGradients {
  Grid t;
  Grid tx;  // dT/dx, nT/m
  Grid ty;  // dT/dy, nT/m
  Grid tz;  // dT/dz toward the source (z positive down), nT/m
};

Grid synth_homogeneous(const HomogeneousSource& source, const GridGeoref& georef);
FieldWithGradients synth_homogeneous_with_gradients(const HomogeneousSource& source,
                                                    const GridGeoref& georef);

Grid synth_dipole(const DipoleSource& source, const GridGeoref& georef,
                  double field_inclination, double field_declination);

// Zero-mean Gaussian noise from a counter-based stream: cell i of stream
// `seed` is the same regardless of evaluation order or thread count.
// The nodata mask is preserved and masked cells are left untouched.
Grid add_noise(const Grid& grid, double sigma, std::uint64_t seed);

}  // namespace aeromag
