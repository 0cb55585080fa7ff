#pragma once

#include <cstddef>
#include <vector>

#include "shaperec/imaging.hpp"

namespace shaperec {

/// 1-D signal of centroid-to-contour distances, in traced point order.
struct RadialProfile {
    std::vector<double> values;
};

struct ResampleConfig {
    int target_length = 64;    // N_i
    int max_denominator = 64;  // bound for the rational approximation of N_i/n
};

/// DCT coefficients x(u) and, optionally, the companion DST coefficients
/// s(u) needed by the start-point shift model.
struct Spectrum {
    std::vector<double> coeffs;
    std::vector<double> sine_coeffs;  // empty if not computed

    bool has_sine() const { return !sine_coeffs.empty(); }
    std::size_t size() const { return coeffs.size(); }
};

struct NormalizedSpectrum {
    std::vector<double> coeffs;  // unit Euclidean norm
    std::size_t size() const { return coeffs.size(); }
};

/// Contiguous disjoint frequency bands covering [0, N). `cuts` holds the
/// interior split indices; k cuts define k+1 bands.
struct BandCuts {
    std::vector<int> cuts;
    int domain = 0;  // N

    int band_count() const { return static_cast<int>(cuts.size()) + 1; }
    std::pair<int, int> band_range(int b) const;  // [begin, end)
};

/// Band layout for the whole object: one BandCuts for the boundary and one
/// per (ordered) hole.
struct BandPartition {
    BandCuts boundary;
    std::vector<BandCuts> holes;
};

struct SegmentConfig {
    double tau = 10.0;           // homogeneity bound max(sigma)/min(sigma)
    int min_band_width = 4;      // w_min
    double sigma_floor = 1e-6;   // guards zero deviations
};

// --- Operations -------------------------------------------------------------

RadialProfile radial_profile(const Contour& contour, double centroid_x, double centroid_y);

/// Rational interpolation/decimation to exactly `target_length` samples
/// (cyclic linear interpolation).
RadialProfile resample(const RadialProfile& profile, const ResampleConfig& config);

Spectrum dct_forward(const RadialProfile& profile);                 // cosine part only
std::vector<double> dst_forward(const RadialProfile& profile);      // sine part s(u)
Spectrum dct_dst_forward(const RadialProfile& profile);             // both

/// Predicted spectrum of the profile with its start point cyclically shifted
/// by h samples (r_h(j) = r((j - h) mod N)):
///   out(u) = cos(beta) x(u) - sin(beta) s(u),  beta = h u pi / N.
/// Exact for even u; approximate at odd u (cyclic wrap-around).
Spectrum shift_spectrum(const Spectrum& base, int shift);

NormalizedSpectrum normalize_amplitude(const Spectrum& spectrum);

/// Order holes by their markers: the first frequency at which the hole
/// spectra differ supplies a marker per hole; holes are labeled
/// 'first','second',... by rising marker, recursing on ties.
/// Returns the permutation: result[rank] = original hole index.
std::vector<std::size_t> order_holes(const std::vector<Spectrum>& hole_spectra,
                                     double marker_epsilon = 1e-6);

/// Fit band cuts from per-coefficient standard deviations across a training
/// collection of normalized spectra (single role).
BandCuts segment_bands(const std::vector<NormalizedSpectrum>& training_spectra,
                       const SegmentConfig& config = {});

std::vector<std::vector<double>> apply_bands(const NormalizedSpectrum& spectrum,
                                             const BandCuts& cuts);

/// Signed square root, element-wise; plot emission only.
std::vector<double> b_transform(const NormalizedSpectrum& spectrum);

}  // namespace shaperec
