#include "shaperec/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "shaperec/errors.hpp"

namespace shaperec {

std::pair<int, int> BandCuts::band_range(int b) const {
    int begin = (b == 0) ? 0 : cuts[static_cast<std::size_t>(b - 1)];
    int end = (b == band_count() - 1) ? domain : cuts[static_cast<std::size_t>(b)];
    return {begin, end};
}

RadialProfile radial_profile(const Contour& contour, double centroid_x, double centroid_y) {
    if (contour.points.empty()) throw InputError("radial_profile: empty contour");
    RadialProfile out;
    out.values.reserve(contour.points.size());
    for (const auto& [x, y] : contour.points) {
        out.values.push_back(std::hypot(centroid_x - x, centroid_y - y));
    }
    return out;
}

namespace {

// Best rational approximation c/d of p with d <= max_den, via continued
// fraction convergents.
std::pair<long, long> rational_approx(double p, long max_den) {
    long h_prev = 1, h = static_cast<long>(std::floor(p));
    long k_prev = 0, k = 1;
    double frac = p - std::floor(p);
    while (frac > 1e-12) {
        double inv = 1.0 / frac;
        long a = static_cast<long>(std::floor(inv));
        frac = inv - std::floor(inv);
        long h_next = a * h + h_prev;
        long k_next = a * k + k_prev;
        if (k_next > max_den) break;
        h_prev = h;
        h = h_next;
        k_prev = k;
        k = k_next;
    }
    if (h < 1) h = 1;
    return {h, k};
}

double cyclic_interp(const std::vector<double>& v, double pos) {
    std::size_t n = v.size();
    double wrapped = std::fmod(pos, static_cast<double>(n));
    if (wrapped < 0) wrapped += static_cast<double>(n);
    std::size_t i = static_cast<std::size_t>(wrapped);
    if (i >= n) i = n - 1;
    double t = wrapped - static_cast<double>(i);
    return v[i] * (1.0 - t) + v[(i + 1) % n] * t;
}

std::vector<double> cyclic_resample_to(const std::vector<double>& v, std::size_t target) {
    std::vector<double> out(target);
    double step = static_cast<double>(v.size()) / static_cast<double>(target);
    for (std::size_t j = 0; j < target; ++j) out[j] = cyclic_interp(v, step * static_cast<double>(j));
    return out;
}

}  // namespace

RadialProfile resample(const RadialProfile& profile, const ResampleConfig& config) {
    const std::size_t n = profile.values.size();
    const std::size_t target = static_cast<std::size_t>(config.target_length);
    if (n < 2) throw InputError("resample: profile needs at least 2 samples");
    if (n == target) return profile;

    double p = static_cast<double>(target) / static_cast<double>(n);
    auto [c, d] = rational_approx(p, config.max_denominator);

    // Interpolate up by c, take every d-th sample, then correct the residual
    // rounding with one exact-length cyclic resample.
    std::vector<double> up(n * static_cast<std::size_t>(c));
    for (std::size_t i = 0; i < up.size(); ++i) {
        up[i] = cyclic_interp(profile.values, static_cast<double>(i) / static_cast<double>(c));
    }
    std::vector<double> dec;
    dec.reserve(up.size() / static_cast<std::size_t>(d) + 1);
    for (std::size_t i = 0; i < up.size(); i += static_cast<std::size_t>(d)) dec.push_back(up[i]);

    RadialProfile out;
    out.values = (dec.size() == target) ? std::move(dec) : cyclic_resample_to(dec, target);
    return out;
}

Spectrum dct_forward(const RadialProfile& profile) {
    const std::size_t n = profile.values.size();
    const double scale = std::sqrt(2.0 / static_cast<double>(n));
    Spectrum out;
    out.coeffs.resize(n);
    for (std::size_t u = 0; u < n; ++u) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += profile.values[j] *
                   std::cos((2.0 * static_cast<double>(j) + 1.0) * static_cast<double>(u) * M_PI /
                            (2.0 * static_cast<double>(n)));
        }
        out.coeffs[u] = scale * acc;
    }
    return out;
}

std::vector<double> dst_forward(const RadialProfile& profile) {
    const std::size_t n = profile.values.size();
    const double scale = std::sqrt(2.0 / static_cast<double>(n));
    std::vector<double> out(n);
    for (std::size_t u = 0; u < n; ++u) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += profile.values[j] *
                   std::sin((2.0 * static_cast<double>(j) + 1.0) * static_cast<double>(u) * M_PI /
                            (2.0 * static_cast<double>(n)));
        }
        out[u] = scale * acc;
    }
    out[0] = 0.0;  // sin(0) terms exactly
    return out;
}

Spectrum dct_dst_forward(const RadialProfile& profile) {
    Spectrum out = dct_forward(profile);
    out.sine_coeffs = dst_forward(profile);
    return out;
}

Spectrum shift_spectrum(const Spectrum& base, int shift) {
    if (!base.has_sine()) throw InputError("shift_spectrum: base has no sine coefficients");
    const int n = static_cast<int>(base.size());
    if (shift < 0 || shift >= n) throw InputError("shift_spectrum: shift out of [0, N)");
    Spectrum out;
    out.coeffs.resize(static_cast<std::size_t>(n));
    for (int u = 0; u < n; ++u) {
        double beta = static_cast<double>(shift) * static_cast<double>(u) * M_PI /
                      static_cast<double>(n);
        out.coeffs[static_cast<std::size_t>(u)] =
            std::cos(beta) * base.coeffs[static_cast<std::size_t>(u)] -
            std::sin(beta) * base.sine_coeffs[static_cast<std::size_t>(u)];
    }
    return out;
}

NormalizedSpectrum normalize_amplitude(const Spectrum& spectrum) {
    double norm = std::sqrt(std::inner_product(spectrum.coeffs.begin(), spectrum.coeffs.end(),
                                               spectrum.coeffs.begin(), 0.0));
    if (norm == 0.0) throw InputError("normalize_amplitude: zero spectrum");
    NormalizedSpectrum out;
    out.coeffs.resize(spectrum.coeffs.size());
    std::transform(spectrum.coeffs.begin(), spectrum.coeffs.end(), out.coeffs.begin(),
                   [norm](double v) { return v / norm; });
    return out;
}

namespace {

void order_holes_rec(const std::vector<Spectrum>& spectra, std::vector<std::size_t>& group,
                     std::size_t u, double eps, std::vector<std::size_t>& out) {
    if (group.size() == 1) {
        out.push_back(group[0]);
        return;
    }
    const std::size_t len = spectra[group[0]].size();
    for (; u < len; ++u) {
        double lo = spectra[group[0]].coeffs[u], hi = lo;
        for (std::size_t gi : group) {
            lo = std::min(lo, spectra[gi].coeffs[u]);
            hi = std::max(hi, spectra[gi].coeffs[u]);
        }
        if (hi - lo <= eps) continue;  // all homonymous coefficients equal here

        std::sort(group.begin(), group.end(), [&](std::size_t a, std::size_t b) {
            return spectra[a].coeffs[u] != spectra[b].coeffs[u]
                       ? spectra[a].coeffs[u] < spectra[b].coeffs[u]
                       : a < b;
        });
        // Chain consecutive near-equal markers into tied subsets and recurse.
        std::size_t i = 0;
        while (i < group.size()) {
            std::size_t j = i + 1;
            while (j < group.size() &&
                   spectra[group[j]].coeffs[u] - spectra[group[j - 1]].coeffs[u] <= eps) {
                ++j;
            }
            std::vector<std::size_t> tied(group.begin() + static_cast<std::ptrdiff_t>(i),
                                          group.begin() + static_cast<std::ptrdiff_t>(j));
            order_holes_rec(spectra, tied, u + 1, eps, out);
            i = j;
        }
        return;
    }
    throw InputError("order_holes: hole spectra indistinguishable at every frequency");
}

}  // namespace

std::vector<std::size_t> order_holes(const std::vector<Spectrum>& hole_spectra,
                                     double marker_epsilon) {
    std::vector<std::size_t> out;
    if (hole_spectra.empty()) return out;
    for (const auto& s : hole_spectra) {
        if (s.size() != hole_spectra[0].size())
            throw InputError("order_holes: hole spectra differ in length");
    }
    std::vector<std::size_t> all(hole_spectra.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    order_holes_rec(hole_spectra, all, 0, marker_epsilon, out);
    return out;
}

BandCuts segment_bands(const std::vector<NormalizedSpectrum>& training_spectra,
                       const SegmentConfig& config) {
    if (training_spectra.size() < 2)
        throw InputError("segment_bands: need at least 2 training spectra");
    const std::size_t n = training_spectra[0].size();
    for (const auto& s : training_spectra) {
        if (s.size() != n) throw InputError("segment_bands: spectra differ in length");
    }

    // Per-coefficient sample standard deviation.
    std::vector<double> sigma(n);
    for (std::size_t u = 0; u < n; ++u) {
        double mean = 0.0;
        for (const auto& s : training_spectra) mean += s.coeffs[u];
        mean /= static_cast<double>(training_spectra.size());
        double ss = 0.0;
        for (const auto& s : training_spectra) {
            double d = s.coeffs[u] - mean;
            ss += d * d;
        }
        sigma[u] = std::sqrt(ss / static_cast<double>(training_spectra.size() - 1));
        sigma[u] = std::max(sigma[u], config.sigma_floor);
    }

    BandCuts out;
    out.domain = static_cast<int>(n);
    double band_min = sigma[0], band_max = sigma[0];
    int band_start = 0;
    for (int u = 1; u < static_cast<int>(n); ++u) {
        double nmin = std::min(band_min, sigma[static_cast<std::size_t>(u)]);
        double nmax = std::max(band_max, sigma[static_cast<std::size_t>(u)]);
        bool violates = nmax / nmin > config.tau;
        if (violates && u - band_start >= config.min_band_width) {
            out.cuts.push_back(u);
            band_start = u;
            band_min = band_max = sigma[static_cast<std::size_t>(u)];
        } else {
            band_min = nmin;
            band_max = nmax;
        }
    }
    // A trailing band narrower than w_min merges back into its predecessor.
    if (!out.cuts.empty() && out.domain - out.cuts.back() < config.min_band_width) {
        out.cuts.pop_back();
    }
    return out;
}

std::vector<std::vector<double>> apply_bands(const NormalizedSpectrum& spectrum,
                                             const BandCuts& cuts) {
    if (static_cast<int>(spectrum.size()) != cuts.domain)
        throw InputError("apply_bands: spectrum length does not match partition domain");
    std::vector<std::vector<double>> out;
    out.reserve(static_cast<std::size_t>(cuts.band_count()));
    for (int b = 0; b < cuts.band_count(); ++b) {
        auto [begin, end] = cuts.band_range(b);
        out.emplace_back(spectrum.coeffs.begin() + begin, spectrum.coeffs.begin() + end);
    }
    return out;
}

std::vector<double> b_transform(const NormalizedSpectrum& spectrum) {
    std::vector<double> out(spectrum.size());
    std::transform(spectrum.coeffs.begin(), spectrum.coeffs.end(), out.begin(), [](double v) {
        return v >= 0 ? std::sqrt(v) : -std::sqrt(-v);
    });
    return out;
}

}  // namespace shaperec
