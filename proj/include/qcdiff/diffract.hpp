#pragma once

#include "qcdiff/autocorr.hpp"
#include "qcdiff/dual.hpp"

namespace qcdiff {

// Fourier transform of an envelope component restricted to the window:
// integral over W of fn(y) exp(-2 pi i freq y) dy, closed form per piece.
cdouble fourier_window(const PiecewiseFn& fn, const Window& window, double freq);

// Predicted Bragg intensity at a dual-lattice character: squared modulus of
// the windowed mean transform at the internal frequency, over the squared
// covolume. The character is named by its dual-lattice coordinates.
double pp_intensity(const DualScheme& dual, const PiecewiseFn& mean_fn, const Window& window,
                    const Coords& dual_coords);

// Averaged covariance predicted by the envelope: integral of c_g over
// W cap (W + g*), divided by the covolume. Lags outside the dependency set
// give 0; `note` (when non-null) records why.
cdouble ag_theoretical(const Envelope& env, const Scheme& scheme, const Window& window,
                       const Coords& g, std::string* note = nullptr);

struct AcRow {
  Coords g;
  std::vector<double> g_phys;
  cdouble a;
};

// Coefficient table of the absolutely continuous part, g -> A_g. Hermitian:
// the table carries -g alongside g with the conjugate value.
struct AcCoefficients {
  std::vector<AcRow> rows; // sorted by g
  std::string provenance;  // "theoretical" or "empirical"

  const AcRow* find(const Coords& g) const;
};

AcCoefficients theoretical_coefficients(const Envelope& env, const Scheme& scheme,
                                        const Window& window);

// Density of the absolutely continuous part at physical frequency k:
// sum over g of A_g exp(-2 pi i <k, g_phys>). Throws if the table is not
// Hermitian or the imaginary residue survives cancellation.
double ac_density(const AcCoefficients& coeffs, const std::vector<double>& k);

// Empirical diffraction estimate I_n(k) = |sum over D_n of
// w_s exp(-2 pi i <k, s_phys>)|^2 / |D_n| at each listed k. Compensated
// sums in a fixed site order keep the result independent of `threads`.
std::vector<double> periodogram(const WeightedComb& comb, const Region& dn,
                                const std::vector<std::vector<double>>& k_list,
                                std::size_t threads = 1);

struct DiffractionReport {
  struct PeakRow {
    FourierModulePoint point;
    double predicted = 0.0;
    double measured = 0.0;
    double rel_error = 0.0; // (measured - predicted) / predicted; 0 when predicted is 0
  };
  struct BackgroundRow {
    std::vector<double> k;
    double predicted = 0.0;
    double measured = 0.0;
  };
  std::vector<PeakRow> peaks;
  std::vector<BackgroundRow> background;
  std::string scheme_name, sampler_kind;
  double region_volume = 0.0;
  std::size_t support_size = 0;
  std::size_t seeds = 0;
  std::vector<std::string> notes;
};

// Seed-averaged empirical diffraction against the theoretical predictions.
// Peak estimate at chi: mean over seeds of I_n(chi)/|D_n|, which converges
// to the delta mass. Background at k: mean over seeds of I_n(k) minus the
// periodogram of the expectation comb, isolating the covariance part at
// every k, including near peaks. Per-seed slots plus a fixed-order
// reduction make the output independent of the thread count.
DiffractionReport measure_peaks_and_background(const FieldSampler& sampler, const Scheme& scheme,
                                               const Window& window, const Region& dn,
                                               const std::vector<FourierModulePoint>& peak_list,
                                               const std::vector<std::vector<double>>& k_grid,
                                               std::size_t num_seeds, std::uint64_t base_seed,
                                               std::size_t threads = 1);

struct BackgroundFit {
  AcCoefficients coeffs;
  std::vector<Coords> support; // lags with |A_g| above the noise floor
  double noise_floor = 0.0;
  double rms_residual = 0.0;
};

// Least-squares fit of k -> sum_g A_g exp(-2 pi i <k, g_phys>) to sampled
// background values, with the Hermitian constraint built into the
// parameterization (A_0 real, one cos/sin pair per +-g). Requires at least
// twice as many grid points as candidates; throws on a rank-deficient
// design. The noise floor is `noise_floor_frac` times the fitted |A_0|.
BackgroundFit fit_background(const std::vector<std::vector<double>>& k_grid,
                             const std::vector<double>& values,
                             const std::vector<Coords>& candidates, const Scheme& scheme,
                             double noise_floor_frac = 0.05);

// Peak amplitude |e^(chi*)| of a mean function on the window, with the
// total-variation decay bound tv/(2 pi |chi*|) as the cutoff radius.
AmplitudeFn amplitude_from_mean(const PiecewiseFn& mean_fn, const Window& window);

} // namespace qcdiff
