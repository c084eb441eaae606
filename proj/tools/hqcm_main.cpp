// hqcm: synthetic data generation, training, evaluation, attention-map
// export and model comparison for the hybrid quantum-classical classifier.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "hqcm/config.hpp"
#include "hqcm/data.hpp"
#include "hqcm/metrics.hpp"
#include "hqcm/model.hpp"
#include "hqcm/train.hpp"

namespace fs = std::filesystem;
using namespace hqcm;

namespace {

// argument-value problems exit with 2, runtime/data problems with 1
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

RunConfig load_run_config(const std::string& config_path, const std::vector<std::string>& overrides,
                          std::optional<std::uint64_t> seed_flag) {
    RunConfig cfg;
    if (const char* env_seed = std::getenv("HQCM_SEED"))
        cfg.seed = std::strtoull(env_seed, nullptr, 10);  // fallback; file and flags override
    if (!config_path.empty()) cfg = RunConfig::from_file(config_path, cfg);
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
        try {
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    if (seed_flag) cfg.seed = *seed_flag;
    return cfg;
}

Dataset load_data_dir(const std::string& dir, int image_size) {
    const fs::path manifest = fs::path(dir) / "manifest.csv";
    if (!fs::exists(manifest))
        throw std::runtime_error("data: no manifest.csv under '" + dir + "'");
    return load_dataset(manifest.string(), image_size);
}

PgmImage to_pgm(const Tensor<float>& plane, int size) {
    PgmImage img{size, size, {}};
    img.pixels.resize(static_cast<std::size_t>(size) * size);
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const float v = std::clamp(plane.data[i], 0.0f, 1.0f);
        img.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    return img;
}

int cmd_gen_data(const std::string& out, int n, int size, std::uint64_t seed) {
    auto summary = generate_synthetic(n, size, seed, out);
    std::cout << "wrote " << n << " samples to " << out << "\n";
    std::cout << "class  train  val  test\n";
    for (std::size_t k = 0; k < summary.split_counts.size(); ++k)
        std::cout << k << "      " << summary.split_counts[k][0] << "      " << summary.split_counts[k][1]
                  << "    " << summary.split_counts[k][2] << "\n";
    std::cout << "manifest: " << summary.manifest_path << "\n";
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& data_dir, const std::string& out,
              const std::string& history_path) {
    Dataset ds = load_data_dir(data_dir, cfg.image_size);
    RunConfig effective = cfg;
    effective.num_classes = ds.num_classes;

    Model<float> model(effective.model_config());
    model.init_params(effective.seed);
    std::cout << "training " << effective.variant << " model (" << model.param_count()
              << " parameters) on " << ds.indices(Split::train).size() << " samples\n";

    TrainResult result = train(model, ds, effective.train_config(), &std::cout);
    save_checkpoint(model, out);
    const std::string hist = history_path.empty() ? out + ".history.csv" : history_path;
    write_history_csv(hist, result.history);

    std::cout << "checkpoint: " << out << "\nhistory: " << hist << "\n";
    std::cout << "final val accuracy: " << result.history.back().val_acc << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data_dir, const std::string& report_path,
             const std::string& split_name_str) {
    Model<float> model = load_checkpoint<float>(ckpt);
    Dataset ds = load_data_dir(data_dir, model.config().input_size);
    const Split split = split_from_name(split_name_str);

    std::vector<double> unit_weights(static_cast<std::size_t>(model.config().num_classes), 1.0);
    EvalResult eval = evaluate(model, ds, split, unit_weights, LossWeights{}, 64);
    MetricsReport report = classification_report(eval.predictions, eval.labels, model.config().num_classes);

    std::cout << report_to_text(report);
    if (!report_path.empty()) {
        std::ofstream os(report_path, std::ios::trunc);
        if (!os) throw std::runtime_error("eval: cannot write '" + report_path + "'");
        os << report_to_json(report) << "\n";
        std::cout << "report: " << report_path << "\n";
    }
    return 0;
}

int cmd_attn_maps(const std::string& ckpt, const std::string& data_dir, const std::string& out,
                  double tau) {
    if (tau <= 0.0 || tau >= 1.0) throw UsageError("--tau must lie strictly inside (0,1)");
    Model<float> model = load_checkpoint<float>(ckpt);
    model.set_training(false);
    Dataset ds = load_data_dir(data_dir, model.config().input_size);
    fs::create_directories(out);

    const int S = model.config().input_size;
    std::ofstream csv((fs::path(out) / "jaccard.csv").string(), std::ios::trunc);
    csv << "sample_id,label,jaccard\n";

    for (std::size_t i : ds.indices(Split::test)) {
        const Sample& sample = ds.samples[i];
        auto fwd = model.forward(sample.image.reshaped({1, 1, S, S}));
        Tensor<float> attn = fwd.attention.reshaped({1, S, S});

        float mx = 0;
        for (float v : attn.data) mx = std::max(mx, v);
        Tensor<float> binar({1, S, S});
        for (std::size_t p = 0; p < attn.data.size(); ++p)
            binar.data[p] = (mx > 0 && attn.data[p] >= tau * mx) ? 1.0f : 0.0f;
        Tensor<float> overlay({1, S, S});
        for (std::size_t p = 0; p < attn.data.size(); ++p)
            overlay.data[p] = std::min(1.0f, sample.image.data[p] + 0.5f * attn.data[p]);

        const std::string tag = std::to_string(i);
        write_pgm((fs::path(out) / ("sample" + tag + "_input.pgm")).string(), to_pgm(sample.image, S));
        write_pgm((fs::path(out) / ("sample" + tag + "_mask.pgm")).string(), to_pgm(sample.mask, S));
        write_pgm((fs::path(out) / ("sample" + tag + "_attention.pgm")).string(), to_pgm(attn, S));
        write_pgm((fs::path(out) / ("sample" + tag + "_binarized.pgm")).string(), to_pgm(binar, S));
        write_pgm((fs::path(out) / ("sample" + tag + "_overlay.pgm")).string(), to_pgm(overlay, S));

        csv << i << "," << sample.label << ","
            << jaccard_at(attn, sample.mask, tau) << "\n";
    }
    std::cout << "attention maps in " << out << "\n";
    return 0;
}

int cmd_compare(const std::string& ckpt_a, const std::string& ckpt_b, const std::string& data_dir,
                const std::vector<double>& thresholds) {
    for (double t : thresholds)
        if (t <= 0.0 || t >= 1.0) throw UsageError("thresholds must lie strictly inside (0,1)");
    Model<float> a = load_checkpoint<float>(ckpt_a);
    Model<float> b = load_checkpoint<float>(ckpt_b);
    if (a.config().input_size != b.config().input_size ||
        a.config().num_classes != b.config().num_classes)
        throw std::runtime_error("compare: checkpoints expect different datasets");
    Dataset ds = load_data_dir(data_dir, a.config().input_size);
    auto rows = compare_models(a, b, ds, thresholds);
    std::cout << comparison_to_text(rows, variant_name(a.config().variant) + std::string("-a"),
                                    variant_name(b.config().variant) + std::string("-b"));
    return 0;
}

int cmd_export_embeddings(const std::string& ckpt, const std::string& data_dir,
                          const std::string& layer, const std::string& out,
                          const std::string& split_name_str) {
    EmbeddingLayer which;
    try {
        which = embedding_layer_from_name(layer);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    Model<float> model = load_checkpoint<float>(ckpt);
    Dataset ds = load_data_dir(data_dir, model.config().input_size);
    export_embeddings(model, ds, split_from_name(split_name_str), which, out);
    std::cout << "embeddings: " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hybrid quantum-classical image classifier"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic image+mask dataset");
    std::string gen_out;
    int gen_n = 400, gen_size = 32;
    std::uint64_t gen_seed = 42;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--n", gen_n, "sample count (>= 40)");
    gen->add_option("--size", gen_size, "image size, multiple of 8");
    gen->add_option("--seed", gen_seed, "generator seed");

    auto* tr = app.add_subcommand("train", "train a model and write a checkpoint");
    std::string tr_config, tr_data, tr_variant, tr_out, tr_history;
    std::vector<std::string> tr_sets;
    std::optional<std::uint64_t> tr_seed;
    tr->add_option("--config", tr_config, "key = value configuration file");
    tr->add_option("--data", tr_data, "dataset directory (with manifest.csv)")->required();
    tr->add_option("--variant", tr_variant, "hybrid | classical");
    tr->add_option("--out", tr_out, "checkpoint path")->required();
    tr->add_option("--history", tr_history, "history CSV path (default: <out>.history.csv)");
    tr->add_option("--seed", tr_seed, "seed override");
    tr->add_option("--set", tr_sets, "config override key=value (repeatable)");

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint and emit the metrics report");
    std::string ev_ckpt, ev_data, ev_report, ev_split = "test";
    ev->add_option("--ckpt", ev_ckpt, "checkpoint path")->required();
    ev->add_option("--data", ev_data, "dataset directory")->required();
    ev->add_option("--report", ev_report, "metrics JSON output path");
    ev->add_option("--split", ev_split, "train | val | test (default test)");

    auto* am = app.add_subcommand("attn-maps", "export per-sample attention maps as PGM");
    std::string am_ckpt, am_data, am_out;
    double am_tau = 0.99;
    am->add_option("--ckpt", am_ckpt, "checkpoint path")->required();
    am->add_option("--data", am_data, "dataset directory")->required();
    am->add_option("--out", am_out, "output directory")->required();
    am->add_option("--tau", am_tau, "binarization threshold in (0,1)");

    auto* cp = app.add_subcommand("compare", "Jaccard + Wilcoxon comparison of two checkpoints");
    std::string cp_a, cp_b, cp_data;
    std::vector<double> cp_taus{0.99, 0.90, 0.75};
    cp->add_option("--ckpt-a", cp_a, "first checkpoint")->required();
    cp->add_option("--ckpt-b", cp_b, "second checkpoint")->required();
    cp->add_option("--data", cp_data, "dataset directory")->required();
    cp->add_option("--thresholds", cp_taus, "relative thresholds");

    auto* ex = app.add_subcommand("export-embeddings", "write layer embeddings as CSV");
    std::string ex_ckpt, ex_data, ex_layer = "quantum_out", ex_out, ex_split = "test";
    ex->add_option("--ckpt", ex_ckpt, "checkpoint path")->required();
    ex->add_option("--data", ex_data, "dataset directory")->required();
    ex->add_option("--layer", ex_layer, "quantum_out | pre_head");
    ex->add_option("--out", ex_out, "CSV output path")->required();
    ex->add_option("--split", ex_split, "train | val | test (default test)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_gen_data(gen_out, gen_n, gen_size, gen_seed);
        if (tr->parsed()) {
            RunConfig cfg = load_run_config(tr_config, tr_sets, tr_seed);
            if (!tr_variant.empty()) cfg.set("variant", tr_variant);
            return cmd_train(cfg, tr_data, tr_out, tr_history);
        }
        if (ev->parsed()) return cmd_eval(ev_ckpt, ev_data, ev_report, ev_split);
        if (am->parsed()) return cmd_attn_maps(am_ckpt, am_data, am_out, am_tau);
        if (cp->parsed()) return cmd_compare(cp_a, cp_b, cp_data, cp_taus);
        if (ex->parsed()) return cmd_export_embeddings(ex_ckpt, ex_data, ex_layer, ex_out, ex_split);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
