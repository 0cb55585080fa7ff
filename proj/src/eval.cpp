#include "shaperec/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "shaperec/errors.hpp"
#include "json.hpp"

namespace shaperec {

namespace {

double normal_cdf(double x, double mu, double sigma) {
    return 0.5 * std::erfc(-(x - mu) / (sigma * M_SQRT2));
}

}  // namespace

double gaussian_ovl(double mu1, double sigma1, double mu2, double sigma2) {
    if (sigma1 == sigma2) {
        return 2.0 * normal_cdf(-(std::abs(mu1 - mu2)) / 2.0, 0.0, sigma1);
    }
    // Intersection points of the two pdfs: quadratic in x.
    double a = 1.0 / (2.0 * sigma2 * sigma2) - 1.0 / (2.0 * sigma1 * sigma1);
    double b = mu1 / (sigma1 * sigma1) - mu2 / (sigma2 * sigma2);
    double c = mu2 * mu2 / (2.0 * sigma2 * sigma2) - mu1 * mu1 / (2.0 * sigma1 * sigma1) +
               std::log(sigma2 / sigma1);
    double disc = b * b - 4.0 * a * c;
    if (disc <= 0) {
        // should not happen for distinct sigmas; fall back to the pooled-sigma bound
        double s = std::sqrt(0.5 * (sigma1 * sigma1 + sigma2 * sigma2));
        return 2.0 * normal_cdf(-(std::abs(mu1 - mu2)) / 2.0, 0.0, s);
    }
    double sq = std::sqrt(disc);
    std::vector<double> roots = {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)};
    std::sort(roots.begin(), roots.end());

    // Integrate min(f1, f2) piecewise between the intersections. Segment ends
    // extend to +-infinity; the dominating pdf per segment is decided by log
    // density at an interior point (raw pdfs can underflow to zero).
    double ovl = 0.0;
    for (std::size_t i = 0; i <= roots.size(); ++i) {
        bool lo_inf = (i == 0), hi_inf = (i == roots.size());
        double pad = 1.0 + sigma1 + sigma2;
        double mid = lo_inf   ? roots.front() - pad
                     : hi_inf ? roots.back() + pad
                              : 0.5 * (roots[i - 1] + roots[i]);
        double z1 = (mid - mu1) / sigma1, z2 = (mid - mu2) / sigma2;
        bool first_smaller =
            -0.5 * z1 * z1 - std::log(sigma1) <= -0.5 * z2 * z2 - std::log(sigma2);
        double mu = first_smaller ? mu1 : mu2;
        double sigma = first_smaller ? sigma1 : sigma2;
        double lo_cdf = lo_inf ? 0.0 : normal_cdf(roots[i - 1], mu, sigma);
        double hi_cdf = hi_inf ? 1.0 : normal_cdf(roots[i], mu, sigma);
        ovl += hi_cdf - lo_cdf;
    }
    return std::clamp(ovl, 0.0, 1.0);
}

double overlap_degree(const std::vector<std::vector<double>>& vectors_k,
                      const std::vector<std::vector<double>>& vectors_l, double sigma_floor) {
    if (vectors_k.size() < 2 || vectors_l.size() < 2)
        throw InputError("overlap_degree: need at least 2 vectors per class");
    const std::size_t dim = vectors_k[0].size();
    for (const auto& v : vectors_k)
        if (v.size() != dim) throw InputError("overlap_degree: dimension mismatch");
    for (const auto& v : vectors_l)
        if (v.size() != dim) throw InputError("overlap_degree: dimension mismatch");

    auto fit = [&](const std::vector<std::vector<double>>& vs, std::size_t u) {
        double mean = 0.0;
        for (const auto& v : vs) mean += v[u];
        mean /= static_cast<double>(vs.size());
        double ss = 0.0;
        for (const auto& v : vs) {
            double d = v[u] - mean;
            ss += d * d;
        }
        double sigma = std::sqrt(ss / static_cast<double>(vs.size() - 1));
        return std::pair<double, double>{mean, std::max(sigma, sigma_floor)};
    };

    double sum = 0.0;
    for (std::size_t u = 0; u < dim; ++u) {
        auto [mk, sk] = fit(vectors_k, u);
        auto [ml, sl] = fit(vectors_l, u);
        sum += gaussian_ovl(mk, sk, ml, sl);
    }
    return sum / static_cast<double>(dim);
}

Confusion recognition_rate(const std::vector<int>& predictions, const std::vector<int>& labels,
                           const std::vector<int>& class_labels) {
    if (predictions.size() != labels.size() || predictions.empty())
        throw InputError("recognition_rate: empty or mismatched inputs");
    Confusion out;
    out.labels = class_labels;
    const std::size_t m = class_labels.size();
    out.counts.assign(m, std::vector<int>(m + 1, 0));  // last column: rejected
    auto index_of = [&](int cls) {
        auto it = std::find(class_labels.begin(), class_labels.end(), cls);
        if (it == class_labels.end())
            throw InputError("recognition_rate: unknown class " + std::to_string(cls));
        return static_cast<std::size_t>(it - class_labels.begin());
    };
    int correct = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        std::size_t t = index_of(labels[i]);
        if (predictions[i] < 0) {
            out.counts[t][m] += 1;  // rejected
        } else {
            out.counts[t][index_of(predictions[i])] += 1;
            if (predictions[i] == labels[i]) ++correct;
        }
    }
    out.rate = static_cast<double>(correct) / static_cast<double>(predictions.size());
    return out;
}

std::map<std::string, std::pair<int, int>> mismatch_table(
    const std::vector<std::string>& conditions, const std::vector<bool>& correct) {
    if (conditions.size() != correct.size())
        throw InputError("mismatch_table: length mismatch");
    std::map<std::string, std::pair<int, int>> out;
    for (std::size_t i = 0; i < conditions.size(); ++i) {
        auto& [miss, total] = out[conditions[i]];
        ++total;
        if (!correct[i]) ++miss;
    }
    return out;
}

ShiftSurface shift_variance_surface(const std::vector<RadialProfile>& base_profiles) {
    if (base_profiles.empty()) throw InputError("shift_variance_surface: no profiles");
    const std::size_t n = base_profiles[0].values.size();
    ShiftSurface out;
    out.domain = static_cast<int>(n);
    out.deviation.assign(n, std::vector<double>(n, 0.0));
    out.a_variance.assign(n, std::vector<double>(n, 0.0));

    std::vector<std::vector<double>> a_samples(n * n);
    for (const auto& profile : base_profiles) {
        if (profile.values.size() != n)
            throw InputError("shift_variance_surface: profile length mismatch");
        Spectrum base = dct_dst_forward(profile);
        for (std::size_t h = 0; h < n; ++h) {
            Spectrum pred = shift_spectrum(base, static_cast<int>(h));
            // Matching time-domain convention: start point moved backward.
            RadialProfile shifted;
            shifted.values.resize(n);
            for (std::size_t j = 0; j < n; ++j)
                shifted.values[j] = profile.values[(j + n - h) % n];
            Spectrum actual = dct_forward(shifted);
            for (std::size_t u = 0; u < n; ++u) {
                out.deviation[u][h] += std::abs(pred.coeffs[u] - actual.coeffs[u]);
                if (std::abs(base.coeffs[u]) > 1e-12) {
                    a_samples[u * n + h].push_back(pred.coeffs[u] / base.coeffs[u]);
                }
            }
        }
    }
    for (auto& row : out.deviation)
        for (auto& v : row) v /= static_cast<double>(base_profiles.size());
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t h = 0; h < n; ++h) {
            const auto& s = a_samples[u * n + h];
            if (s.size() < 2) continue;
            double mean = 0.0;
            for (double v : s) mean += v;
            mean /= static_cast<double>(s.size());
            double ss = 0.0;
            for (double v : s) ss += (v - mean) * (v - mean);
            out.a_variance[u][h] = ss / static_cast<double>(s.size() - 1);
        }
    }
    return out;
}

// --- Model evaluation ------------------------------------------------------------

EvalReport evaluate_model(const RecognitionModel& model, const std::vector<EvalSample>& samples) {
    if (samples.empty()) throw InputError("evaluate_model: no samples");
    EvalReport report;
    report.class_labels = model.class_labels;
    const std::size_t m = model.class_labels.size();
    const std::size_t band_count = model.bands.size();

    std::vector<int> labels, pred3, pred2;
    std::vector<std::string> conditions;
    std::vector<bool> correct3;
    double latency_sum = 0.0;

    for (const auto& sample : samples) {
        labels.push_back(sample.class_id);
        conditions.push_back(sample.condition);
        try {
            auto t0 = std::chrono::steady_clock::now();
            Recognition rec = recognize(model, sample.image);
            latency_sum +=
                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
            pred3.push_back(rec.class_label);
            correct3.push_back(rec.class_label == sample.class_id);

            // Stage-2 decision: majority vote over per-band argmaxes.
            std::vector<int> votes(m, 0);
            for (std::size_t b = 0; b < band_count; ++b) {
                std::size_t best = 0;
                for (std::size_t k = 1; k < m; ++k) {
                    if (rec.y[b * m + k] > rec.y[b * m + best]) best = k;
                }
                votes[best] += 1;
            }
            std::size_t win = 0;
            for (std::size_t k = 1; k < m; ++k)
                if (votes[k] > votes[win]) win = k;
            pred2.push_back(model.class_labels[win]);

            report.z_vectors[sample.class_id].push_back(rec.z);
            // Input-side overlap is measured on the boundary spectrum, the
            // descriptor part whose class clusters the generator calibrates.
            ExemplarDescriptor desc = compute_descriptor(sample.image, model.config);
            report.input_vectors[sample.class_id].push_back(desc.boundary_norm.coeffs);
        } catch (const Error&) {
            ++report.rejected;
            pred3.push_back(-1);
            pred2.push_back(-1);
            correct3.push_back(false);
        }
    }

    report.stage3 = recognition_rate(pred3, labels, model.class_labels);
    report.stage2 = recognition_rate(pred2, labels, model.class_labels);
    report.mismatches = mismatch_table(conditions, correct3);
    report.mean_latency_ms = latency_sum / static_cast<double>(samples.size());

    for (int cls : model.class_labels) {
        int total = 0, good = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] != cls) continue;
            ++total;
            if (pred3[i] == cls) ++good;
        }
        report.per_class_rate[cls] = total ? static_cast<double>(good) / total : 0.0;
    }
    return report;
}

OverlapReport overlap_report(const std::map<int, std::vector<std::vector<double>>>& by_class,
                             const std::string& point) {
    OverlapReport out;
    out.point = point;
    for (const auto& [cls, vecs] : by_class) {
        (void)vecs;
        out.labels.push_back(cls);
    }
    const std::size_t m = out.labels.size();
    out.s.assign(m, std::vector<double>(m, 1.0));
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t l = k + 1; l < m; ++l) {
            double v = overlap_degree(by_class.at(out.labels[k]), by_class.at(out.labels[l]));
            out.s[k][l] = v;
            out.s[l][k] = v;
        }
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void emit_reports(const EvalReport& report, const std::vector<OverlapReport>& overlaps,
                  const std::string& config_echo_json, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto path = [&](const char* name) { return (std::filesystem::path(out_dir) / name).string(); };

    nlohmann::json j;
    j["schema"] = 1;
    j["config"] = nlohmann::json::parse(config_echo_json);
    j["class_labels"] = report.class_labels;
    j["stage3_rate"] = report.stage3.rate;
    j["stage2_rate"] = report.stage2.rate;
    j["rejected"] = report.rejected;
    for (const auto& [cls, rate] : report.per_class_rate)
        j["per_class_rate"][std::to_string(cls)] = rate;
    for (const auto& [cond, mt] : report.mismatches) {
        j["mismatches"][cond] = {{"miss", mt.first}, {"total", mt.second}};
    }
    {
        std::ofstream out(path("eval.json"), std::ios::binary);
        if (!out) throw InputError("emit_reports: cannot write eval.json");
        out << j.dump(2) << "\n";
    }

    // Wall-clock timing is inherently run-dependent; it lives in its own
    // artifact so the main reports stay byte-reproducible.
    {
        nlohmann::json t;
        t["schema"] = 1;
        t["mean_latency_ms"] = report.mean_latency_ms;
        std::ofstream out(path("timing.json"), std::ios::binary);
        out << t.dump(2) << "\n";
    }

    {
        std::ofstream out(path("confusion.csv"), std::ios::binary);
        out << "true_class,predicted_class,count\n";
        const std::size_t m = report.class_labels.size();
        for (std::size_t t = 0; t < m; ++t) {
            for (std::size_t p = 0; p < m; ++p) {
                out << report.class_labels[t] << "," << report.class_labels[p] << ","
                    << report.stage3.counts[t][p] << "\n";
            }
            out << report.class_labels[t] << ",rejected," << report.stage3.counts[t][m] << "\n";
        }
    }

    {
        std::ofstream out(path("overlap.csv"), std::ios::binary);
        out << "point,k,l,s_kl\n";
        for (const auto& ov : overlaps) {
            for (std::size_t k = 0; k < ov.labels.size(); ++k) {
                for (std::size_t l = k + 1; l < ov.labels.size(); ++l) {
                    out << ov.point << "," << ov.labels[k] << "," << ov.labels[l] << ","
                        << format_double(ov.s[k][l]) << "\n";
                }
            }
        }
    }
}

}  // namespace shaperec
