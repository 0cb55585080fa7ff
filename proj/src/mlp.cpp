#include "shaperec/mlp.hpp"

#include <cmath>
#include <numeric>

#include "shaperec/errors.hpp"
#include "json.hpp"

namespace shaperec {

double Rng::next_gaussian() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    double u1 = 0.0;
    do {
        u1 = next_double();
    } while (u1 <= 0.0);
    double u2 = next_double();
    double mag = std::sqrt(-2.0 * std::log(u1));
    spare_ = mag * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return mag * std::cos(2.0 * M_PI * u2);
}

Mlp mlp_init(std::size_t input_size, std::size_t hidden_size, std::size_t output_size,
             std::uint64_t seed, double weight_init_scale) {
    if (input_size == 0 || hidden_size == 0 || output_size == 0)
        throw InputError("mlp_init: all sizes must be >= 1");
    Mlp net;
    net.input_size = input_size;
    net.hidden_size = hidden_size;
    net.output_size = output_size;
    net.hidden_weights = Matrix(hidden_size, input_size + 1);
    net.output_weights = Matrix(output_size, hidden_size + 1);
    Rng rng(seed);
    double h_bound = weight_init_scale / std::sqrt(static_cast<double>(input_size + 1));
    for (auto& w : net.hidden_weights.data) w = rng.uniform(-h_bound, h_bound);
    double o_bound = weight_init_scale / std::sqrt(static_cast<double>(hidden_size + 1));
    for (auto& w : net.output_weights.data) w = rng.uniform(-o_bound, o_bound);
    return net;
}

namespace {

void affine_tanh(const Matrix& w, const std::vector<double>& in, std::vector<double>& pre,
                 std::vector<double>& out) {
    pre.resize(w.rows);
    out.resize(w.rows);
    for (std::size_t r = 0; r < w.rows; ++r) {
        const double* row = &w.data[r * w.cols];
        double acc = row[w.cols - 1];  // bias
        for (std::size_t c = 0; c + 1 < w.cols; ++c) acc += row[c] * in[c];
        pre[r] = acc;
        out[r] = std::tanh(acc);
    }
}

}  // namespace

std::vector<double> mlp_forward(const Mlp& net, const std::vector<double>& input) {
    if (input.size() != net.input_size) throw InputError("mlp_forward: input length mismatch");
    std::vector<double> hpre, hout, opre, oout;
    affine_tanh(net.hidden_weights, input, hpre, hout);
    affine_tanh(net.output_weights, hout, opre, oout);
    return oout;
}

Gradients mlp_gradient(const Mlp& net, const std::vector<double>& input,
                       const std::vector<double>& target) {
    if (input.size() != net.input_size) throw InputError("mlp_gradient: input length mismatch");
    if (target.size() != net.output_size) throw InputError("mlp_gradient: target length mismatch");

    std::vector<double> hpre, hout, opre, oout;
    affine_tanh(net.hidden_weights, input, hpre, hout);
    affine_tanh(net.output_weights, hout, opre, oout);

    Gradients g;
    g.hidden = Matrix(net.hidden_weights.rows, net.hidden_weights.cols);
    g.output = Matrix(net.output_weights.rows, net.output_weights.cols);

    // Output layer: delta_o = (y - t) * (1 - y^2).
    std::vector<double> delta_o(net.output_size);
    for (std::size_t k = 0; k < net.output_size; ++k) {
        delta_o[k] = (oout[k] - target[k]) * (1.0 - oout[k] * oout[k]);
    }
    for (std::size_t k = 0; k < net.output_size; ++k) {
        double* row = &g.output.data[k * g.output.cols];
        for (std::size_t j = 0; j < net.hidden_size; ++j) row[j] = delta_o[k] * hout[j];
        row[net.hidden_size] = delta_o[k];  // bias
    }

    // Hidden layer: delta_h = (W2^T delta_o) * (1 - h^2).
    for (std::size_t j = 0; j < net.hidden_size; ++j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < net.output_size; ++k) {
            acc += net.output_weights.at(k, j) * delta_o[k];
        }
        double delta_h = acc * (1.0 - hout[j] * hout[j]);
        double* row = &g.hidden.data[j * g.hidden.cols];
        for (std::size_t i = 0; i < net.input_size; ++i) row[i] = delta_h * input[i];
        row[net.input_size] = delta_h;  // bias
    }
    return g;
}

TrainTrace mlp_train(Mlp& net, const std::vector<Sample>& samples, const TrainConfig& config) {
    if (samples.empty()) throw InputError("mlp_train: empty sample list");
    for (const auto& s : samples) {
        if (s.input.size() != net.input_size || s.target.size() != net.output_size)
            throw InputError("mlp_train: sample dimension mismatch");
    }

    Rng rng(config.seed);
    Matrix vel_h(net.hidden_weights.rows, net.hidden_weights.cols);
    Matrix vel_o(net.output_weights.rows, net.output_weights.cols);
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainTrace trace;
    for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t si : order) {
            Gradients g = mlp_gradient(net, samples[si].input, samples[si].target);
            for (std::size_t i = 0; i < vel_h.data.size(); ++i) {
                vel_h.data[i] = config.momentum * vel_h.data[i] -
                                config.learning_rate * g.hidden.data[i];
                net.hidden_weights.data[i] += vel_h.data[i];
            }
            for (std::size_t i = 0; i < vel_o.data.size(); ++i) {
                vel_o.data[i] = config.momentum * vel_o.data[i] -
                                config.learning_rate * g.output.data[i];
                net.output_weights.data[i] += vel_o.data[i];
            }
        }

        double mse = 0.0;
        for (const auto& s : samples) {
            auto y = mlp_forward(net, s.input);
            double e = 0.0;
            for (std::size_t k = 0; k < y.size(); ++k) {
                double d = y[k] - s.target[k];
                e += d * d;
            }
            mse += e / static_cast<double>(net.output_size);
        }
        mse /= static_cast<double>(samples.size());
        if (!std::isfinite(mse)) throw Error("mlp_train: loss diverged (non-finite)");
        trace.epoch_mse.push_back(mse);
        trace.final_mse = mse;
        trace.epochs_run = epoch + 1;
        if (mse <= config.target_mse) break;
    }
    return trace;
}

std::string mlp_save(const Mlp& net) {
    nlohmann::json j;
    j["schema"] = 1;
    j["activation"] = "tanh";
    j["dims"] = {net.input_size, net.hidden_size, net.output_size};
    j["hidden_weights"] = net.hidden_weights.data;
    j["output_weights"] = net.output_weights.data;
    return j.dump();
}

Mlp mlp_load(const std::string& payload) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(payload);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("mlp_load: malformed payload: ") + e.what());
    }
    try {
        if (j.at("schema").get<int>() != 1) throw ParseError("mlp_load: unsupported schema");
        if (j.at("activation").get<std::string>() != "tanh")
            throw ParseError("mlp_load: unsupported activation");
        Mlp net;
        net.input_size = j.at("dims").at(0).get<std::size_t>();
        net.hidden_size = j.at("dims").at(1).get<std::size_t>();
        net.output_size = j.at("dims").at(2).get<std::size_t>();
        net.hidden_weights = Matrix(net.hidden_size, net.input_size + 1);
        net.output_weights = Matrix(net.output_size, net.hidden_size + 1);
        auto hw = j.at("hidden_weights").get<std::vector<double>>();
        auto ow = j.at("output_weights").get<std::vector<double>>();
        if (hw.size() != net.hidden_weights.data.size() ||
            ow.size() != net.output_weights.data.size())
            throw ParseError("mlp_load: weight count mismatch");
        net.hidden_weights.data = std::move(hw);
        net.output_weights.data = std::move(ow);
        return net;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("mlp_load: missing or bad field: ") + e.what());
    }
}

}  // namespace shaperec
