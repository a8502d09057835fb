#pragma once

#include <cstdio>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qadv/attacks.hpp"
#include "qadv/circuit.hpp"
#include "qadv/dataset.hpp"
#include "qadv/errors.hpp"
#include "qadv/expressibility.hpp"
#include "qadv/io.hpp"
#include "qadv/model.hpp"
#include "qadv/report.hpp"

namespace qadv {

struct DataSpec {
    std::string source = "synthetic"; // synthetic | directory | features-csv
    std::string path;                 // directory / features-csv only
    std::size_t count = 1000;         // synthetic only
    std::size_t height = 18;
    std::size_t width = 18;
    std::uint64_t seed = 7;
};

struct XpressSpec {
    std::size_t samples = 5000;
    int bins = 75;
    std::uint64_t seed = 12345;
};

struct AttackSweep {
    std::vector<AttackKind> kinds = {AttackKind::Fgsm, AttackKind::DeepFool, AttackKind::Pgd};
    std::vector<double> epsilons = {0.25};
    int pgd_steps = 10;
    double pgd_alpha = -1.0;
    bool pgd_random_start = false;
    std::uint64_t pgd_seed = 0;
    int deepfool_max_iter = 50;
    double deepfool_overshoot = 0.02;
};

struct ExperimentConfig {
    std::string model_name = "model";
    std::string out_dir = "run-out";
    DataSpec data;
    std::vector<double> split_ratios = {0.8, 0.2};
    ModelConfig model;
    TrainConfig train;
    AttackSweep attacks;
    XpressSpec xpress;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                       const std::string& where) {
    if (!j.is_object()) {
        throw ConfigError("config: '" + where + "' must be an object");
    }
    for (const auto& [key, _] : j.items()) {
        if (!allowed.count(key)) {
            throw ConfigError("config: unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
void maybe(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config: bad value for '" + std::string(key) + "': " + e.what());
        }
    }
}

} // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    detail::check_keys(j, {"model_name", "out_dir", "data", "split_ratios", "model", "train",
                           "attacks", "expressibility"},
                       "top level");
    ExperimentConfig cfg;
    detail::maybe(j, "model_name", cfg.model_name);
    detail::maybe(j, "out_dir", cfg.out_dir);
    detail::maybe(j, "split_ratios", cfg.split_ratios);

    if (j.contains("data")) {
        const auto& d = j.at("data");
        detail::check_keys(d, {"source", "path", "count", "height", "width", "seed"}, "data");
        detail::maybe(d, "source", cfg.data.source);
        detail::maybe(d, "path", cfg.data.path);
        detail::maybe(d, "count", cfg.data.count);
        detail::maybe(d, "height", cfg.data.height);
        detail::maybe(d, "width", cfg.data.width);
        detail::maybe(d, "seed", cfg.data.seed);
        if (cfg.data.source != "synthetic" && cfg.data.source != "directory" &&
            cfg.data.source != "features-csv") {
            throw ConfigError("config: data.source must be synthetic, directory or features-csv");
        }
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        detail::check_keys(
            m, {"computation", "extractor", "feature_dim", "hidden_dim", "template_id", "seed"},
            "model");
        std::string comp = computation_name(cfg.model.computation);
        std::string extr = extractor_name(cfg.model.extractor);
        detail::maybe(m, "computation", comp);
        detail::maybe(m, "extractor", extr);
        cfg.model.computation = computation_from_name(comp);
        cfg.model.extractor = extractor_from_name(extr);
        detail::maybe(m, "feature_dim", cfg.model.feature_dim);
        detail::maybe(m, "hidden_dim", cfg.model.hidden_dim);
        detail::maybe(m, "template_id", cfg.model.template_id);
        detail::maybe(m, "seed", cfg.model.seed);
    }
    if (j.contains("train")) {
        const auto& t = j.at("train");
        detail::check_keys(t,
                           {"epochs", "batch_size", "learning_rate", "optimizer", "seed",
                            "adam_beta1", "adam_beta2", "adam_eps"},
                           "train");
        detail::maybe(t, "epochs", cfg.train.epochs);
        detail::maybe(t, "batch_size", cfg.train.batch_size);
        detail::maybe(t, "learning_rate", cfg.train.learning_rate);
        std::string opt = optimizer_name(cfg.train.optimizer);
        detail::maybe(t, "optimizer", opt);
        cfg.train.optimizer = optimizer_from_name(opt);
        detail::maybe(t, "seed", cfg.train.seed);
        detail::maybe(t, "adam_beta1", cfg.train.adam_beta1);
        detail::maybe(t, "adam_beta2", cfg.train.adam_beta2);
        detail::maybe(t, "adam_eps", cfg.train.adam_eps);
    }
    if (j.contains("attacks")) {
        const auto& a = j.at("attacks");
        detail::check_keys(a,
                           {"kinds", "epsilons", "pgd_steps", "pgd_alpha", "pgd_random_start",
                            "pgd_seed", "deepfool_max_iter", "deepfool_overshoot"},
                           "attacks");
        if (a.contains("kinds")) {
            cfg.attacks.kinds.clear();
            for (const auto& k : a.at("kinds")) {
                cfg.attacks.kinds.push_back(attack_from_name(k.get<std::string>()));
            }
        }
        detail::maybe(a, "epsilons", cfg.attacks.epsilons);
        detail::maybe(a, "pgd_steps", cfg.attacks.pgd_steps);
        detail::maybe(a, "pgd_alpha", cfg.attacks.pgd_alpha);
        detail::maybe(a, "pgd_random_start", cfg.attacks.pgd_random_start);
        detail::maybe(a, "pgd_seed", cfg.attacks.pgd_seed);
        detail::maybe(a, "deepfool_max_iter", cfg.attacks.deepfool_max_iter);
        detail::maybe(a, "deepfool_overshoot", cfg.attacks.deepfool_overshoot);
    }
    if (j.contains("expressibility")) {
        const auto& x = j.at("expressibility");
        detail::check_keys(x, {"samples", "bins", "seed"}, "expressibility");
        detail::maybe(x, "samples", cfg.xpress.samples);
        detail::maybe(x, "bins", cfg.xpress.bins);
        detail::maybe(x, "seed", cfg.xpress.seed);
    }
    if (cfg.attacks.epsilons.empty()) {
        throw ConfigError("config: attacks.epsilons must not be empty");
    }
    for (double e : cfg.attacks.epsilons) {
        if (e < 0.0) {
            throw ConfigError("config: negative epsilon in attacks.epsilons");
        }
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["model_name"] = cfg.model_name;
    j["out_dir"] = cfg.out_dir;
    j["split_ratios"] = cfg.split_ratios;
    j["data"] = {{"source", cfg.data.source}, {"path", cfg.data.path},
                 {"count", cfg.data.count},   {"height", cfg.data.height},
                 {"width", cfg.data.width},   {"seed", cfg.data.seed}};
    j["model"] = {{"computation", computation_name(cfg.model.computation)},
                  {"extractor", extractor_name(cfg.model.extractor)},
                  {"feature_dim", cfg.model.feature_dim},
                  {"hidden_dim", cfg.model.hidden_dim},
                  {"template_id", cfg.model.template_id},
                  {"seed", cfg.model.seed}};
    j["train"] = {{"epochs", cfg.train.epochs},
                  {"batch_size", cfg.train.batch_size},
                  {"learning_rate", cfg.train.learning_rate},
                  {"optimizer", optimizer_name(cfg.train.optimizer)},
                  {"seed", cfg.train.seed},
                  {"adam_beta1", cfg.train.adam_beta1},
                  {"adam_beta2", cfg.train.adam_beta2},
                  {"adam_eps", cfg.train.adam_eps}};
    std::vector<std::string> kind_names;
    for (AttackKind k : cfg.attacks.kinds) {
        kind_names.push_back(attack_name(k));
    }
    j["attacks"] = {{"kinds", kind_names},
                    {"epsilons", cfg.attacks.epsilons},
                    {"pgd_steps", cfg.attacks.pgd_steps},
                    {"pgd_alpha", cfg.attacks.pgd_alpha},
                    {"pgd_random_start", cfg.attacks.pgd_random_start},
                    {"pgd_seed", cfg.attacks.pgd_seed},
                    {"deepfool_max_iter", cfg.attacks.deepfool_max_iter},
                    {"deepfool_overshoot", cfg.attacks.deepfool_overshoot}};
    j["expressibility"] = {{"samples", cfg.xpress.samples},
                           {"bins", cfg.xpress.bins},
                           {"seed", cfg.xpress.seed}};
    return j;
}

// Exclusive marker file so two runs cannot interleave writes in one output
// directory. Removed when the run finishes, including on error unwind.
class RunLock {
  public:
    explicit RunLock(const std::string& dir) : path_(dir + "/.qadv-lock") {
        ensure_directory(dir);
        std::FILE* f = std::fopen(path_.c_str(), "wx");
        if (!f) {
            throw Error("output directory is locked by another run (" + path_ +
                        " exists); remove the file if that run is dead");
        }
        std::fclose(f);
    }
    ~RunLock() { std::remove(path_.c_str()); }
    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

  private:
    std::string path_;
};

struct ExperimentResult {
    std::vector<ReportRow> rows;
    TrainHistory history;
    double clean_accuracy = 0.0; // fraction on the test split
    std::optional<ExpressibilityResult> xpress;
    std::string report_path;
    std::string checkpoint_path;
};

namespace detail {

inline std::string sanitize_csv(std::string s) {
    for (char& c : s) {
        if (c == ',' || c == '\n' || c == '\r') {
            c = ';';
        }
    }
    return s;
}

inline std::string history_csv(const TrainHistory& h) {
    std::ostringstream os;
    os << "epoch,train_loss,train_acc,val_loss,val_acc\n";
    for (std::size_t i = 0; i < h.epochs.size(); ++i) {
        const EpochStats& e = h.epochs[i];
        os << i << "," << format_double(e.train_loss) << "," << format_double(e.train_acc) << ","
           << format_double(e.val_loss) << "," << format_double(e.val_acc) << "\n";
    }
    return os.str();
}

} // namespace detail

// Full pipeline: data -> split -> train -> clean accuracy -> expressibility
// (hybrid only) -> attack sweep -> artifacts. Everything that reaches the
// report is recomputed deterministically from the config, so rerunning the
// same config byte-reproduces report.csv. If the attack sweep throws, the
// rows finished so far are flushed with a trailing "[FAILED]" marker row
// before the error propagates.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    RunLock lock(cfg.out_dir);

    PatchDataset ds;
    ModelConfig mcfg = cfg.model;
    if (cfg.data.source == "synthetic") {
        ds = generate_synthetic(cfg.data.count, cfg.data.height, cfg.data.width, cfg.data.seed);
        mcfg.input_shape = {3, cfg.data.height, cfg.data.width};
    } else if (cfg.data.source == "directory") {
        ds = load_dataset_directory(cfg.data.path);
        mcfg.input_shape = ds.samples.front().image.shape();
    } else {
        ds = load_features_csv(cfg.data.path);
        mcfg.input_shape = ds.samples.front().image.shape();
        if (cfg.model.extractor != ExtractorKind::FileFeatures) {
            throw ConfigError("features-csv data requires the file-features extractor");
        }
    }
    for (const Sample& s : ds.samples) {
        if (s.image.shape() != mcfg.input_shape) {
            throw DataError("dataset mixes sample shapes: " + shape_string(s.image) + " vs " +
                            Tensor::shape_string(mcfg.input_shape));
        }
    }
    if (cfg.data.source != "features-csv" && cfg.model.extractor == ExtractorKind::FileFeatures) {
        throw ConfigError("file-features extractor requires features-csv data");
    }

    assign_splits(ds, cfg.split_ratios, cfg.train.seed);
    const std::vector<Sample> train_set = subset(ds, Split::Train);
    const std::vector<Sample> val_set =
        cfg.split_ratios.size() == 3 ? subset(ds, Split::Val) : std::vector<Sample>{};
    const std::vector<Sample> test_set = subset(ds, Split::Test);

    HybridModel model = make_model(mcfg);

    ExperimentResult res;
    res.history = train(model, train_set, val_set, cfg.train);
    res.clean_accuracy = accuracy(model, test_set);

    if (mcfg.computation == Computation::Hybrid) {
        res.xpress = expressibility(registry(mcfg.template_id), cfg.xpress.samples,
                                    cfg.xpress.bins, cfg.xpress.seed);
    }

    res.checkpoint_path = cfg.out_dir + "/checkpoint.json";
    save_checkpoint(model, res.checkpoint_path);
    write_text_file(cfg.out_dir + "/history.csv", detail::history_csv(res.history));
    if (model.qnn) {
        write_text_file(cfg.out_dir + "/circuit.txt", program_to_text(model.qnn->program));
    }

    res.report_path = cfg.out_dir + "/report.csv";
    auto base_row = [&](double eps) {
        ReportRow r;
        r.model_name = cfg.model_name;
        r.comp_type = computation_name(mcfg.computation);
        r.n_images = ds.samples.size();
        r.clean_acc = res.clean_accuracy * 100.0;
        if (mcfg.computation == Computation::Hybrid) {
            r.vqc_id = mcfg.template_id;
            r.xpress = res.xpress->kl;
            r.n_qubits = res.xpress->n_qubits;
        }
        r.epsilon = eps;
        return r;
    };

    try {
        for (double eps : cfg.attacks.epsilons) {
            ReportRow row = base_row(eps);
            for (AttackKind kind : cfg.attacks.kinds) {
                AttackConfig ac;
                ac.kind = kind;
                ac.epsilon = eps;
                ac.pgd_steps = cfg.attacks.pgd_steps;
                ac.pgd_alpha = cfg.attacks.pgd_alpha;
                ac.pgd_random_start = cfg.attacks.pgd_random_start;
                ac.pgd_seed = cfg.attacks.pgd_seed;
                ac.deepfool_max_iter = cfg.attacks.deepfool_max_iter;
                ac.deepfool_overshoot = cfg.attacks.deepfool_overshoot;
                const AttackEvaluation ev = evaluate_under_attack(model, test_set, ac);
                switch (kind) {
                    case AttackKind::Fgsm: row.acc_fgm = ev.accuracy * 100.0; break;
                    case AttackKind::DeepFool: row.acc_deepfool = ev.accuracy * 100.0; break;
                    case AttackKind::Pgd: row.acc_pgd = ev.accuracy * 100.0; break;
                }
            }
            res.rows.push_back(std::move(row));
        }
    } catch (const std::exception& e) {
        ReportRow marker;
        marker.model_name = "[FAILED] " + detail::sanitize_csv(e.what());
        marker.comp_type = computation_name(mcfg.computation);
        marker.n_images = ds.samples.size();
        marker.clean_acc = res.clean_accuracy * 100.0;
        res.rows.push_back(std::move(marker));
        emit_report(res.rows, res.report_path);
        throw;
    }

    emit_report(res.rows, res.report_path);

    nlohmann::json rows_json = nlohmann::json::array();
    for (const ReportRow& r : res.rows) {
        nlohmann::json rj;
        rj["model"] = r.model_name;
        rj["comp_type"] = r.comp_type;
        rj["n_images"] = r.n_images;
        rj["clean_acc"] = r.clean_acc;
        if (r.vqc_id) rj["vqc"] = *r.vqc_id;
        if (r.xpress) rj["expressibility"] = *r.xpress;
        if (r.n_qubits) rj["n_qubits"] = *r.n_qubits;
        rj["epsilon"] = r.epsilon;
        if (r.acc_fgm) rj["acc_fgm"] = *r.acc_fgm;
        if (r.acc_deepfool) rj["acc_deepfool"] = *r.acc_deepfool;
        if (r.acc_pgd) rj["acc_pgd"] = *r.acc_pgd;
        rows_json.push_back(std::move(rj));
    }
    nlohmann::json out;
    out["config"] = config_to_json(cfg);
    out["rows"] = std::move(rows_json);
    out["clean_accuracy"] = res.clean_accuracy;
    if (res.xpress) {
        out["expressibility"] = {{"template", res.xpress->template_id},
                                 {"n_qubits", res.xpress->n_qubits},
                                 {"samples", res.xpress->samples},
                                 {"bins", res.xpress->bins},
                                 {"seed", res.xpress->seed},
                                 {"kl", res.xpress->kl},
                                 {"standard_error", res.xpress->standard_error}};
    }
    write_text_file(cfg.out_dir + "/rows.json", out.dump(2) + "\n");
    return res;
}

} // namespace qadv
