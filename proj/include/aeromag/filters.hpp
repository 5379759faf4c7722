#pragma once

#include <array>

#include "aeromag/geodata.hpp"

namespace aeromag {

// Padding/taper choices for the FFT-based operators. The grid is embedded
// centered in a power-of-two square of side >= pad_factor * max(n_rows,
// n_cols), extended outward by mirror reflection, with a cosine rolloff
// over `taper` * padded-size cells outside the data frame. The frame values
// themselves are never attenuated. pad_factor 1 on a power-of-two grid
// degenerates to a plain periodic transform.
struct SpectralPlan {
  double pad_factor = 2.0;
  double taper = 0.1;

  void validate() const;
};

// Least-squares polynomial surface, stored as world-frame monomial
// coefficients over [1, x, y, x^2, x*y, y^2]; entries beyond the fitted
// degree are zero. The fit runs in scaled local coordinates internally.
struct PolySurface {
  int degree = 0;
  std::array<double, 6> coeffs{};

  double evaluate(double x, double y) const {
    return coeffs[0] + coeffs[1] * x + coeffs[2] * y + coeffs[3] * x * x +
           coeffs[4] * x * y + coeffs[5] * y * y;
  }
  double slope_x(double x, double y) const {
    return coeffs[1] + 2.0 * coeffs[3] * x + coeffs[4] * y;
  }
  double slope_y(double x, double y) const {
    return coeffs[2] + coeffs[4] * x + 2.0 * coeffs[5] * y;
  }
};

struct DetrendResult {
  Grid residual;
  PolySurface surface;
};

// Regional-residual separation; degree 0, 1 or 2. Fits unmasked cells only.
// Throws NumericalError (RankDeficient) when the unmasked cells cannot
// support the requested degree.
DetrendResult detrend_poly(const Grid& grid, int degree);

// Replaces each nodata cell with the value of the nearest unmasked cell
// (Euclidean distance in cell space, ties to the smaller row then column).
// Spectral operators require a fully unmasked grid.
Grid fill_nodata_nearest(const Grid& grid);

// e^(-|k| h) continuation to a surface `height` meters above the data.
// DC is preserved exactly. Throws DataError (MaskedInput) on nodata.
Grid upward_continue(const Grid& grid, double height, const SpectralPlan& plan = {});

enum class Axis { x, y, z };

// Spectral derivative: i*k multiplication for x/y, |k| for z (z positive
// down, derivative taken toward the source). Output georef equals input.
Grid derivative(const Grid& grid, Axis axis, const SpectralPlan& plan = {});

// Radially symmetric cosine rolloff from cutoff/2 to cutoff; wavelengths
// below `cutoff_wavelength` are removed, the mean is preserved.
// Throws ConfigError (CutoffBelowNyquist) when cutoff < 2 * cell_size.
Grid lowpass(const Grid& grid, double cutoff_wavelength, const SpectralPlan& plan = {});

}  // namespace aeromag
