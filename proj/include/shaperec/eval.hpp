#pragma once

#include <map>
#include <string>
#include <vector>

#include "shaperec/descriptor.hpp"
#include "shaperec/structure.hpp"

namespace shaperec {

/// Degree of overlap between two classes in a feature space: per component,
/// the overlapping coefficient of the two fitted 1-D Gaussians
/// (integral of min(f_k, f_l)), averaged over components.
double overlap_degree(const std::vector<std::vector<double>>& vectors_k,
                      const std::vector<std::vector<double>>& vectors_l,
                      double sigma_floor = 1e-9);

/// Overlapping coefficient of two 1-D Gaussians (closed form via the normal CDF).
double gaussian_ovl(double mu1, double sigma1, double mu2, double sigma2);

struct Confusion {
    std::vector<int> labels;               // class ids, row/col order
    std::vector<std::vector<int>> counts;  // counts[true][predicted]; last col = rejected
    double rate = 0.0;
};

Confusion recognition_rate(const std::vector<int>& predictions, const std::vector<int>& labels,
                           const std::vector<int>& class_labels);

/// Per-condition mismatch counts ("clean", "snr20", "blur", ...).
std::map<std::string, std::pair<int, int>> mismatch_table(
    const std::vector<std::string>& conditions, const std::vector<bool>& correct);

struct ShiftSurface {
    int domain = 0;  // N
    std::vector<std::vector<double>> deviation;   // [u][h], |predicted - direct DCT|
    std::vector<std::vector<double>> a_variance;  // [u][h], variance of a(u,h) across bases
};

ShiftSurface shift_variance_surface(const std::vector<RadialProfile>& base_profiles);

// --- Model evaluation ---------------------------------------------------------

struct EvalSample {
    int class_id = 0;
    std::string condition;  // "clean" | "snr<level>" | "blur"
    BinaryImage image;
};

struct EvalReport {
    std::vector<int> class_labels;
    Confusion stage3;                       // argmax(Z)
    Confusion stage2;                       // per-band argmax majority vote
    std::map<std::string, std::pair<int, int>> mismatches;  // condition -> (miss, total)
    std::map<int, double> per_class_rate;
    double mean_latency_ms = 0.0;
    int rejected = 0;
    // Vectors for overlap reports, keyed by class id.
    std::map<int, std::vector<std::vector<double>>> input_vectors;  // DB_1 level
    std::map<int, std::vector<std::vector<double>>> z_vectors;      // output level
};

EvalReport evaluate_model(const RecognitionModel& model, const std::vector<EvalSample>& samples);

struct OverlapReport {
    std::string point;  // "db1_input" | "z_output"
    std::vector<int> labels;
    std::vector<std::vector<double>> s;  // symmetric matrix
};

OverlapReport overlap_report(const std::map<int, std::vector<std::vector<double>>>& by_class,
                             const std::string& point);

/// Writes eval.json, confusion.csv, overlap.csv (deterministic bytes) and
/// timing.json (wall-clock, excluded from determinism guarantees).
void emit_reports(const EvalReport& report, const std::vector<OverlapReport>& overlaps,
                  const std::string& config_echo_json, const std::string& out_dir);

std::string format_double(double v);  // stable %.17g formatting for CSV

}  // namespace shaperec
