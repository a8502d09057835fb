// Command-line front end: dataset generation, training, evaluation, attacks,
// expressibility scans, report checking, and full experiment runs.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qadv/qadv.hpp"

namespace {

using namespace qadv;

PatchDataset load_samples(const std::string& source, const std::string& path) {
    if (source == "directory") {
        return load_dataset_directory(path);
    }
    if (source == "features-csv") {
        return load_features_csv(path);
    }
    throw ConfigError("unknown data source '" + source + "' (directory, features-csv)");
}

// --seed K fans out to the pipeline stages so one flag pins the whole run.
void apply_master_seed(ExperimentConfig& cfg, std::uint64_t k) {
    cfg.data.seed = k;
    cfg.train.seed = k + 1;
    cfg.model.seed = k + 2;
    cfg.xpress.seed = k + 3;
}

int cmd_gen_data(const std::string& out_dir, std::size_t count, std::size_t height,
                 std::size_t width, std::uint64_t seed) {
    const PatchDataset ds = generate_synthetic(count, height, width, seed);
    write_dataset_directory(ds, out_dir);
    std::cout << "wrote " << ds.samples.size() << " samples (" << 3 << "x" << height << "x"
              << width << ") to " << out_dir << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_override,
              std::uint64_t* seed) {
    ExperimentConfig cfg = load_config(config_path);
    if (!out_override.empty()) {
        cfg.out_dir = out_override;
    }
    if (seed) {
        apply_master_seed(cfg, *seed);
    }
    RunLock lock(cfg.out_dir);

    PatchDataset ds;
    ModelConfig mcfg = cfg.model;
    if (cfg.data.source == "synthetic") {
        ds = generate_synthetic(cfg.data.count, cfg.data.height, cfg.data.width, cfg.data.seed);
        mcfg.input_shape = {3, cfg.data.height, cfg.data.width};
    } else {
        ds = load_samples(cfg.data.source, cfg.data.path);
        mcfg.input_shape = ds.samples.front().image.shape();
    }
    assign_splits(ds, cfg.split_ratios, cfg.train.seed);
    const auto train_set = subset(ds, Split::Train);
    const auto val_set =
        cfg.split_ratios.size() == 3 ? subset(ds, Split::Val) : std::vector<Sample>{};
    const auto test_set = subset(ds, Split::Test);

    HybridModel model = make_model(mcfg);
    const TrainHistory hist = train(model, train_set, val_set, cfg.train);
    const double acc = accuracy(model, test_set);

    const std::string ckpt = cfg.out_dir + "/checkpoint.json";
    save_checkpoint(model, ckpt);
    for (std::size_t e = 0; e < hist.epochs.size(); ++e) {
        std::cout << "epoch " << e << ": train_loss=" << hist.epochs[e].train_loss
                  << " train_acc=" << hist.epochs[e].train_acc;
        if (hist.used_validation) {
            std::cout << " val_acc=" << hist.epochs[e].val_acc;
        }
        std::cout << "\n";
    }
    std::cout << "test_accuracy=" << acc << "\n";
    std::cout << "checkpoint written to " << ckpt << "\n";
    return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& source, const std::string& path) {
    const HybridModel model = load_checkpoint(ckpt_path);
    const PatchDataset ds = load_samples(source, path);
    const LossAcc la = evaluate_loss_acc(model, ds.samples);
    std::cout << "n=" << ds.samples.size() << " accuracy=" << la.acc << " loss=" << la.loss
              << "\n";
    return 0;
}

int cmd_attack(const std::string& ckpt_path, const std::string& source, const std::string& path,
               const AttackConfig& acfg) {
    const HybridModel model = load_checkpoint(ckpt_path);
    const PatchDataset ds = load_samples(source, path);
    const AttackEvaluation ev = evaluate_under_attack(model, ds.samples, acfg);
    std::cout << "attack=" << attack_name(acfg.kind) << " epsilon=" << acfg.epsilon << "\n";
    std::cout << "clean_accuracy=" << ev.clean_accuracy << "\n";
    std::cout << "adversarial_accuracy=" << ev.accuracy << "\n";
    std::cout << "success_rate=" << ev.success_rate << "\n";
    std::cout << "mean_linf=" << ev.mean_linf << " max_linf=" << ev.max_linf << "\n";
    return 0;
}

int cmd_expressibility(int template_id, std::size_t samples, int bins, std::uint64_t seed,
                       bool sample_features) {
    const ExpressibilityResult r =
        expressibility(registry(template_id), samples, bins, seed, sample_features);
    std::cout << "template,n_qubits,samples,bins,seed,kl,standard_error\n";
    std::cout << r.template_id << "," << r.n_qubits << "," << r.samples << "," << r.bins << ","
              << r.seed << "," << format_double(r.kl) << "," << format_double(r.standard_error)
              << "\n";
    return 0;
}

int cmd_report(const std::string& path) {
    const auto rows = parse_report(read_text_file(path));
    std::cout << format_report(rows);
    std::cerr << "ok: " << rows.size() << " row(s)\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_override,
            std::uint64_t* seed) {
    ExperimentConfig cfg = load_config(config_path);
    if (!out_override.empty()) {
        cfg.out_dir = out_override;
    }
    if (seed) {
        apply_master_seed(cfg, *seed);
    }
    const ExperimentResult res = run_experiment(cfg);
    std::cout << read_text_file(res.report_path);
    std::cerr << "report written to " << res.report_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"adversarial robustness benchmark for hybrid classifiers"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "write a synthetic PPM dataset directory");
    std::string gen_out = "data-out";
    std::size_t gen_count = 100, gen_h = 18, gen_w = 18;
    std::uint64_t gen_seed = 7;
    gen->add_option("--out", gen_out, "output directory");
    gen->add_option("--count", gen_count, "number of samples (even, >= 4)");
    gen->add_option("--height", gen_h, "patch height");
    gen->add_option("--width", gen_w, "patch width");
    gen->add_option("--seed", gen_seed, "generator seed");

    // train
    auto* tr = app.add_subcommand("train", "train a model from a config and save a checkpoint");
    std::string tr_config, tr_out;
    std::uint64_t tr_seed = 0;
    bool tr_has_seed = false;
    tr->add_option("--config", tr_config, "experiment config JSON")->required();
    tr->add_option("--out", tr_out, "override the config's out_dir");
    tr->add_option("--seed", tr_seed, "master seed for data/train/model stages")
        ->each([&](const std::string&) { tr_has_seed = true; });

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    std::string ev_ckpt, ev_source = "directory", ev_path;
    ev->add_option("--checkpoint", ev_ckpt, "checkpoint JSON")->required();
    ev->add_option("--source", ev_source, "directory or features-csv");
    ev->add_option("--path", ev_path, "dataset location")->required();

    // attack
    auto* at = app.add_subcommand("attack", "evaluate a checkpoint under one attack");
    std::string at_ckpt, at_source = "directory", at_path, at_kind = "fgsm";
    AttackConfig acfg;
    at->add_option("--checkpoint", at_ckpt, "checkpoint JSON")->required();
    at->add_option("--source", at_source, "directory or features-csv");
    at->add_option("--path", at_path, "dataset location")->required();
    at->add_option("--attack", at_kind, "fgsm, pgd or deepfool");
    at->add_option("--eps", acfg.epsilon, "L-infinity budget");
    at->add_option("--pgd-steps", acfg.pgd_steps, "pgd iterations");
    at->add_option("--pgd-alpha", acfg.pgd_alpha, "pgd step size (<= 0: epsilon/4)");
    at->add_flag("--pgd-random-start", acfg.pgd_random_start, "randomize the pgd start point");
    at->add_option("--pgd-seed", acfg.pgd_seed, "seed for the random start");
    at->add_option("--deepfool-max-iter", acfg.deepfool_max_iter, "deepfool iteration cap");
    at->add_option("--deepfool-overshoot", acfg.deepfool_overshoot, "deepfool overshoot factor");

    // expressibility
    auto* xp = app.add_subcommand("expressibility", "estimate a template's divergence from Haar");
    int xp_template = 1;
    std::size_t xp_samples = 5000;
    int xp_bins = 75;
    std::uint64_t xp_seed = 12345;
    bool xp_features = false;
    xp->add_option("--template", xp_template, "registry template id (1..6)");
    xp->add_option("--samples", xp_samples, "fidelity pairs to draw (>= 1000)");
    xp->add_option("--bins", xp_bins, "histogram bins (>= 10)");
    xp->add_option("--seed", xp_seed, "sampler seed");
    xp->add_flag("--sample-features", xp_features, "also randomize the embedded features");

    // report
    auto* rp = app.add_subcommand("report", "validate and echo a report CSV");
    std::string rp_path;
    rp->add_option("path", rp_path, "report.csv to check")->required();

    // run
    auto* rn = app.add_subcommand("run", "full pipeline: data, training, attacks, report");
    std::string rn_config, rn_out;
    std::uint64_t rn_seed = 0;
    bool rn_has_seed = false;
    rn->add_option("--config", rn_config, "experiment config JSON")->required();
    rn->add_option("--out", rn_out, "override the config's out_dir");
    rn->add_option("--seed", rn_seed, "master seed for data/train/model/expressibility")
        ->each([&](const std::string&) { rn_has_seed = true; });

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            return cmd_gen_data(gen_out, gen_count, gen_h, gen_w, gen_seed);
        }
        if (tr->parsed()) {
            return cmd_train(tr_config, tr_out, tr_has_seed ? &tr_seed : nullptr);
        }
        if (ev->parsed()) {
            return cmd_eval(ev_ckpt, ev_source, ev_path);
        }
        if (at->parsed()) {
            acfg.kind = attack_from_name(at_kind);
            return cmd_attack(at_ckpt, at_source, at_path, acfg);
        }
        if (xp->parsed()) {
            return cmd_expressibility(xp_template, xp_samples, xp_bins, xp_seed, xp_features);
        }
        if (rp->parsed()) {
            return cmd_report(rp_path);
        }
        if (rn->parsed()) {
            return cmd_run(rn_config, rn_out, rn_has_seed ? &rn_seed : nullptr);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
