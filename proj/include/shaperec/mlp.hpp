#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace shaperec {

/// Deterministic 64-bit generator (splitmix64) used everywhere randomness is
/// needed; standard-library distributions are implementation-defined, which
/// would break byte-identical reruns across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    /// Uniform in [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }
    /// Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }
    /// Standard normal (Box-Muller).
    double next_gaussian();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// Dense row-major matrix, minimal surface.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

/// Two-layer feedforward network, tanh on both layers. Weight matrices carry
/// the bias as a trailing column.
struct Mlp {
    std::size_t input_size = 0;
    std::size_t hidden_size = 0;
    std::size_t output_size = 0;
    Matrix hidden_weights;  // hidden_size x (input_size + 1)
    Matrix output_weights;  // output_size x (hidden_size + 1)
};

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    int max_epochs = 2000;
    double target_mse = 1e-4;
    std::uint64_t seed = 1;
    double weight_init_scale = 1.0;
};

struct Sample {
    std::vector<double> input;
    std::vector<double> target;
};

struct TrainTrace {
    std::vector<double> epoch_mse;
    double final_mse = 0.0;
    int epochs_run = 0;
};

struct Gradients {
    Matrix hidden;  // same shape as hidden_weights
    Matrix output;  // same shape as output_weights
};

Mlp mlp_init(std::size_t input_size, std::size_t hidden_size, std::size_t output_size,
             std::uint64_t seed, double weight_init_scale = 1.0);

std::vector<double> mlp_forward(const Mlp& net, const std::vector<double>& input);

/// Gradient of 0.5 * ||forward(input) - target||^2 w.r.t. all weights.
Gradients mlp_gradient(const Mlp& net, const std::vector<double>& input,
                       const std::vector<double>& target);

/// SGD with momentum; per-epoch shuffling from the config seed. Deterministic.
TrainTrace mlp_train(Mlp& net, const std::vector<Sample>& samples, const TrainConfig& config);

std::string mlp_save(const Mlp& net);
Mlp mlp_load(const std::string& payload);

}  // namespace shaperec
