// Command-line front end: dataset generation, training, recognition,
// evaluation, and plot-data emission.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "shaperec/datagen.hpp"
#include "shaperec/errors.hpp"
#include "shaperec/eval.hpp"
#include "shaperec/structure.hpp"

namespace fs = std::filesystem;
using namespace shaperec;

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ModelConfig resolve_config(const std::string& config_path, std::optional<std::uint64_t> seed) {
    ModelConfig config;
    if (!config_path.empty()) config = config_with_overrides(read_text(config_path));
    if (seed) {
        config.seed = *seed;
        config.stage1_train.seed = *seed;
        config.stage2_train.seed = *seed + 1;
        config.stage3_train.seed = *seed + 2;
    }
    return config;
}

std::vector<LabeledImage> load_split(const Dataset& dataset, const std::string& dir,
                                     const std::string& split) {
    std::vector<LabeledImage> out;
    for (const auto& item : dataset.items) {
        if (item.split != split) continue;
        GrayImage gray = load_pgm_file((fs::path(dir) / item.file).string());
        out.push_back({item.class_id, item.exemplar_id, binarize(gray, 128)});
    }
    if (out.empty()) throw InputError("no '" + split + "' items under " + dir);
    return out;
}

std::string condition_of(const DatasetItem& item) {
    if (item.blur) return "blur";
    if (item.snr_db) {
        std::ostringstream ss;
        ss << "snr" << static_cast<int>(*item.snr_db);
        return ss.str();
    }
    return "clean";
}

int cmd_gen(int group, int train_n, int test_n, const std::vector<double>& noise, double blur,
            std::uint64_t seed, const std::string& out_dir) {
    DatasetSpec spec;
    spec.group = group;
    spec.train_per_class = train_n;
    spec.test_per_class = test_n;
    if (!noise.empty()) spec.noise_levels_db = noise;
    spec.blur_fraction = blur;
    spec.master_seed = seed;
    Dataset ds = gen_dataset(spec, out_dir);
    std::cout << "generated " << ds.items.size() << " images under " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& data_dir, const std::string& out_path,
              const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& db_dir) {
    ModelConfig config = resolve_config(config_path, seed);
    Dataset manifest = load_manifest(data_dir);
    std::vector<LabeledImage> train = load_split(manifest, data_dir, "train");
    StageReport report;
    RecognitionModel model = train_mode_a(train, config, &report, db_dir);
    save_model_file(model, out_path);
    std::cout << "trained " << model.bands.size() << " bands, "
              << model.class_labels.size() << " classes in " << report.train_seconds << " s ("
              << report.rejected_exemplars << " exemplars rejected)\n";
    std::cout << "final mse:";
    for (double v : report.stage_mse) std::cout << " " << v;
    std::cout << "\n";
    return 0;
}

int cmd_recognize(const std::string& model_path, const std::string& image_path) {
    RecognitionModel model = load_model_file(model_path);
    GrayImage gray = load_pgm_file(image_path);
    Recognition rec = recognize(model, binarize(gray, model.config.binarize_threshold));
    std::cout << "class=" << rec.class_label << " tie=" << (rec.tie ? "true" : "false")
              << " ms=" << (rec.preprocess_ms + rec.inference_ms) << "\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_dir,
             const std::string& out_dir) {
    RecognitionModel model = load_model_file(model_path);
    Dataset manifest = load_manifest(data_dir);
    std::vector<EvalSample> samples;
    for (const auto& item : manifest.items) {
        if (item.split != "test") continue;
        GrayImage gray = load_pgm_file((fs::path(data_dir) / item.file).string());
        samples.push_back(
            {item.class_id, condition_of(item), binarize(gray, model.config.binarize_threshold)});
    }
    if (samples.empty()) throw InputError("no 'test' items under " + data_dir);
    EvalReport report = evaluate_model(model, samples);

    // Class-overlap degrees mirror the stored exemplar base: descriptor
    // clusters before the cascade vs Z clusters after it, both over the
    // training split.
    std::vector<EvalSample> train_samples;
    for (const auto& item : manifest.items) {
        if (item.split != "train") continue;
        GrayImage gray = load_pgm_file((fs::path(data_dir) / item.file).string());
        train_samples.push_back(
            {item.class_id, condition_of(item), binarize(gray, model.config.binarize_threshold)});
    }
    EvalReport train_report = evaluate_model(model, train_samples);
    std::vector<OverlapReport> overlaps;
    overlaps.push_back(overlap_report(train_report.input_vectors, "db1_input"));
    overlaps.push_back(overlap_report(train_report.z_vectors, "z_output"));
    emit_reports(report, overlaps, config_to_text(model.config), out_dir);
    std::cout << "stage3_rate=" << report.stage3.rate << " stage2_rate=" << report.stage2.rate
              << " rejected=" << report.rejected << "\n";
    return 0;
}

int cmd_plotdata(int group, const std::string& config_path, std::optional<std::uint64_t> seed,
                 const std::string& out_dir) {
    ModelConfig config = resolve_config(config_path, seed);
    fs::create_directories(out_dir);

    // Signed-sqrt spectra of the group's base shapes, one row per coefficient.
    {
        std::ofstream out((fs::path(out_dir) / "fig4_b_transform.csv").string(),
                          std::ios::binary);
        out << "class,u,b\n";
        for (int cls = 1; cls <= config.class_count; ++cls) {
            BinaryImage image = gen_base_shape(shape_spec(group, cls));
            ExemplarDescriptor desc = compute_descriptor(image, config);
            std::vector<double> b = b_transform(desc.boundary_norm);
            for (std::size_t u = 0; u < b.size(); ++u)
                out << cls << "," << u << "," << format_double(b[u]) << "\n";
        }
    }

    // Start-point shift model: deviation and a(u,h) variance over (u, h).
    {
        std::vector<RadialProfile> profiles;
        for (int cls = 1; cls <= config.class_count; ++cls) {
            BinaryImage image = gen_base_shape(shape_spec(group, cls));
            ContourSet contours = trace_contours(image);
            RadialProfile raw =
                radial_profile(contours.boundary, contours.centroid_x, contours.centroid_y);
            profiles.push_back(
                resample(raw, {config.boundary_length, config.max_denominator}));
        }
        ShiftSurface surface = shift_variance_surface(profiles);
        std::ofstream out((fs::path(out_dir) / "fig5_shift_variance.csv").string(),
                          std::ios::binary);
        out << "u,h,deviation,a_variance\n";
        for (int u = 0; u < surface.domain; ++u) {
            for (int h = 0; h < surface.domain; ++h) {
                out << u << "," << h << "," << format_double(surface.deviation[u][h]) << ","
                    << format_double(surface.a_variance[u][h]) << "\n";
            }
        }
    }
    std::cout << "plot data written under " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Translation/scale/rotation-tolerant 2D object recognition"};
    app.require_subcommand(1);

    std::optional<std::uint64_t> seed;
    std::string config_path;

    auto* gen = app.add_subcommand("gen", "Generate a synthetic shape dataset");
    int group = 1, train_n = 20, test_n = 50;
    std::vector<double> noise;
    double blur = 0.05;
    std::uint64_t gen_seed = 1;
    std::string gen_out = "data";
    gen->add_option("--group", group, "Shape group (1-6)")->check(CLI::Range(1, 6));
    gen->add_option("--train-per-class", train_n);
    gen->add_option("--test-per-class", test_n);
    gen->add_option("--noise", noise, "Noise SNR levels (dB)");
    gen->add_option("--blur", blur, "Blur fraction for blurred test items");
    gen->add_option("--seed", gen_seed);
    gen->add_option("--out", gen_out, "Output directory")->required();

    auto* train = app.add_subcommand("train", "Train the three-stage model");
    std::string train_data, train_out = "model.json", train_db;
    train->add_option("--data", train_data, "Dataset directory")->required();
    train->add_option("--out", train_out, "Model archive path");
    train->add_option("--config", config_path, "JSON config override file");
    train->add_option("--seed", seed, "Master seed override");
    train->add_option("--db-dir", train_db, "Persist intermediate stores here");

    auto* recog = app.add_subcommand("recognize", "Classify one PGM image");
    std::string rec_model, rec_image;
    recog->add_option("--model", rec_model)->required();
    recog->add_option("--image", rec_image)->required();

    auto* eval = app.add_subcommand("eval", "Evaluate a model on a test split");
    std::string eval_model, eval_data, eval_out = "reports";
    eval->add_option("--model", eval_model)->required();
    eval->add_option("--data", eval_data)->required();
    eval->add_option("--out", eval_out, "Report directory");

    auto* plot = app.add_subcommand("plotdata", "Emit plot-ready CSV data");
    int plot_group = 1;
    std::string plot_out = "plots";
    plot->add_option("--group", plot_group)->check(CLI::Range(1, 6));
    plot->add_option("--config", config_path, "JSON config override file");
    plot->add_option("--seed", seed, "Master seed override");
    plot->add_option("--out", plot_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed())
            return cmd_gen(group, train_n, test_n, noise, blur, gen_seed, gen_out);
        if (train->parsed())
            return cmd_train(train_data, train_out, config_path, seed, train_db);
        if (recog->parsed()) return cmd_recognize(rec_model, rec_image);
        if (eval->parsed()) return cmd_eval(eval_model, eval_data, eval_out);
        if (plot->parsed()) return cmd_plotdata(plot_group, config_path, seed, plot_out);
    } catch (const ParseError& e) {
        std::cerr << "error kind=parse msg=\"" << e.what() << "\"\n";
        return 1;
    } catch (const InputError& e) {
        std::cerr << "error kind=input msg=\"" << e.what() << "\"\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "error kind=runtime msg=\"" << e.what() << "\"\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error kind=internal msg=\"" << e.what() << "\"\n";
        return 1;
    }
    return 0;
}
