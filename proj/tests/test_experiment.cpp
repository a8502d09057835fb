#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "qadv/experiment.hpp"

using namespace qadv;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    std::string path;
    explicit TempDir(std::string p) : path(std::move(p)) { fs::remove_all(path); }
    ~TempDir() { fs::remove_all(path); }
};

// Small, fast classical pipeline on synthetic patches.
ExperimentConfig tiny_classical(const std::string& out_dir) {
    ExperimentConfig cfg;
    cfg.model_name = "tiny classical";
    cfg.out_dir = out_dir;
    cfg.data.source = "synthetic";
    cfg.data.count = 8;
    cfg.data.height = 10;
    cfg.data.width = 10;
    cfg.data.seed = 3;
    cfg.split_ratios = {0.5, 0.5};
    cfg.model.computation = Computation::Classical;
    cfg.model.extractor = ExtractorKind::Linear;
    cfg.model.feature_dim = 8;
    cfg.model.hidden_dim = 8;
    cfg.train.epochs = 2;
    cfg.train.batch_size = 4;
    cfg.train.learning_rate = 0.05;
    cfg.attacks.epsilons = {0.1};
    cfg.attacks.pgd_steps = 3;
    return cfg;
}

ExperimentConfig tiny_hybrid(const std::string& out_dir, const std::string& csv_path) {
    write_text_file(csv_path,
                    "f0,f1,f2,label\n"
                    "0.1,0.2,0.1,0\n0.2,0.1,0.2,0\n0.15,0.25,0.1,0\n0.2,0.3,0.15,0\n"
                    "0.8,0.9,0.85,1\n0.9,0.8,0.9,1\n0.85,0.95,0.8,1\n0.9,0.9,0.95,1\n");
    ExperimentConfig cfg;
    cfg.model_name = "tiny hybrid";
    cfg.out_dir = out_dir;
    cfg.data.source = "features-csv";
    cfg.data.path = csv_path;
    cfg.split_ratios = {0.5, 0.5};
    cfg.model.computation = Computation::Hybrid;
    cfg.model.extractor = ExtractorKind::FileFeatures;
    cfg.model.template_id = 1;
    cfg.train.epochs = 2;
    cfg.train.batch_size = 4;
    cfg.train.learning_rate = 0.05;
    cfg.attacks.epsilons = {0.1};
    cfg.attacks.pgd_steps = 3;
    cfg.xpress.samples = 1000;
    cfg.xpress.bins = 12;
    return cfg;
}

} // namespace

TEST_CASE("a classical run writes every artifact and a parseable report") {
    TempDir tmp("tmp_exp_classical");
    const ExperimentConfig cfg = tiny_classical(tmp.path);
    const ExperimentResult res = run_experiment(cfg);

    REQUIRE(fs::exists(tmp.path + "/report.csv"));
    REQUIRE(fs::exists(tmp.path + "/rows.json"));
    REQUIRE(fs::exists(tmp.path + "/checkpoint.json"));
    REQUIRE(fs::exists(tmp.path + "/history.csv"));
    REQUIRE(!fs::exists(tmp.path + "/circuit.txt"));  // no circuit in this model
    REQUIRE(!fs::exists(tmp.path + "/.qadv-lock"));   // released

    const auto rows = parse_report(read_text_file(res.report_path));
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].model_name == "tiny classical");
    REQUIRE(rows[0].comp_type == "classical");
    REQUIRE(rows[0].n_images == 8);
    REQUIRE(!rows[0].vqc_id.has_value());
    REQUIRE(!rows[0].xpress.has_value());
    REQUIRE(!rows[0].n_qubits.has_value());
    REQUIRE(rows[0].epsilon == 0.1);
    REQUIRE(rows[0].acc_fgm.has_value());
    REQUIRE(rows[0].acc_deepfool.has_value());
    REQUIRE(rows[0].acc_pgd.has_value());
    REQUIRE(!res.xpress.has_value());

    // The loadable checkpoint reproduces the recorded clean accuracy path.
    const HybridModel m = load_checkpoint(res.checkpoint_path);
    REQUIRE(m.cfg.input_shape == std::vector<std::size_t>{3, 10, 10});

    const std::string hist = read_text_file(tmp.path + "/history.csv");
    REQUIRE(hist.rfind("epoch,train_loss,train_acc,val_loss,val_acc\n", 0) == 0);
    REQUIRE(res.history.epochs.size() == 2);
}

TEST_CASE("a hybrid run reports circuit columns and saves the circuit text") {
    TempDir tmp("tmp_exp_hybrid");
    const ExperimentConfig cfg = tiny_hybrid(tmp.path, tmp.path + "_feats.csv");
    const ExperimentResult res = run_experiment(cfg);

    REQUIRE(fs::exists(tmp.path + "/circuit.txt"));
    const CircuitProgram prog = program_from_text(read_text_file(tmp.path + "/circuit.txt"));
    REQUIRE(prog.n_qubits == 4);

    const auto rows = parse_report(read_text_file(res.report_path));
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].comp_type == "hybrid");
    REQUIRE(rows[0].vqc_id == 1);
    REQUIRE(rows[0].n_qubits == 4);
    REQUIRE(rows[0].xpress.has_value());
    REQUIRE(res.xpress.has_value());
    REQUIRE(res.xpress->samples == 1000);
    fs::remove(tmp.path + "_feats.csv");
}

TEST_CASE("rerunning the same config byte-reproduces the report") {
    TempDir tmp("tmp_exp_rerun");
    const ExperimentConfig cfg = tiny_classical(tmp.path);
    run_experiment(cfg);
    const std::string first = read_text_file(tmp.path + "/report.csv");
    const std::string first_hist = read_text_file(tmp.path + "/history.csv");
    run_experiment(cfg);
    REQUIRE(read_text_file(tmp.path + "/report.csv") == first);
    REQUIRE(read_text_file(tmp.path + "/history.csv") == first_hist);
}

TEST_CASE("a zero budget sweep leaves every accuracy at the clean value") {
    TempDir tmp("tmp_exp_zeroeps");
    ExperimentConfig cfg = tiny_classical(tmp.path);
    cfg.attacks.epsilons = {0.0};
    const ExperimentResult res = run_experiment(cfg);
    const double clean = res.rows[0].clean_acc;
    REQUIRE(*res.rows[0].acc_fgm == clean);
    REQUIRE(*res.rows[0].acc_deepfool == clean);
    REQUIRE(*res.rows[0].acc_pgd == clean);
}

TEST_CASE("one row per epsilon, in sweep order") {
    TempDir tmp("tmp_exp_sweep");
    ExperimentConfig cfg = tiny_classical(tmp.path);
    cfg.attacks.epsilons = {0.05, 0.25};
    cfg.attacks.kinds = {AttackKind::Fgsm};
    const ExperimentResult res = run_experiment(cfg);
    REQUIRE(res.rows.size() == 2);
    REQUIRE(res.rows[0].epsilon == 0.05);
    REQUIRE(res.rows[1].epsilon == 0.25);
    REQUIRE(!res.rows[0].acc_pgd.has_value()); // pgd not requested
}

TEST_CASE("a failing sweep flushes a marker row and releases the lock") {
    TempDir tmp("tmp_exp_failure");
    ExperimentConfig cfg = tiny_classical(tmp.path);
    cfg.attacks.deepfool_max_iter = -1; // rejected inside the sweep
    REQUIRE_THROWS_AS(run_experiment(cfg), ConfigError);

    const std::string text = read_text_file(tmp.path + "/report.csv");
    const auto rows = parse_report(text);
    REQUIRE(rows.size() == 1);
    REQUIRE(rows[0].model_name.rfind("[FAILED]", 0) == 0);
    REQUIRE(!fs::exists(tmp.path + "/.qadv-lock"));

    // The directory is reusable after the failure.
    cfg.attacks.deepfool_max_iter = 50;
    REQUIRE_NOTHROW(run_experiment(cfg));
}

TEST_CASE("a stale lock blocks the run with a pointed message") {
    TempDir tmp("tmp_exp_lock");
    ensure_directory(tmp.path);
    write_text_file(tmp.path + "/.qadv-lock", "");
    const ExperimentConfig cfg = tiny_classical(tmp.path);
    REQUIRE_THROWS_WITH(run_experiment(cfg), Catch::Matchers::ContainsSubstring("locked"));
    REQUIRE(!fs::exists(tmp.path + "/report.csv"));
}

TEST_CASE("strict config parsing rejects unknown keys everywhere") {
    using nlohmann::json;
    REQUIRE_THROWS_AS(config_from_json(json{{"oops", 1}}), ConfigError);
    REQUIRE_THROWS_AS(config_from_json(json{{"data", {{"oops", 1}}}}), ConfigError);
    REQUIRE_THROWS_AS(config_from_json(json{{"model", {{"oops", 1}}}}), ConfigError);
    REQUIRE_THROWS_AS(config_from_json(json{{"train", {{"oops", 1}}}}), ConfigError);
    REQUIRE_THROWS_AS(config_from_json(json{{"attacks", {{"oops", 1}}}}), ConfigError);
    REQUIRE_THROWS_AS(config_from_json(json{{"expressibility", {{"oops", 1}}}}), ConfigError);
    REQUIRE_THROWS_AS(config_from_json(json{{"data", 5}}), ConfigError); // not an object
}

TEST_CASE("config values are validated while parsing") {
    using nlohmann::json;
    REQUIRE_THROWS_AS(config_from_json(json{{"data", {{"source", "tape"}}}}), ConfigError);
    REQUIRE_THROWS_AS(config_from_json(json{{"model", {{"computation", "quantum"}}}}),
                      ConfigError);
    REQUIRE_THROWS_AS(config_from_json(json{{"train", {{"optimizer", "lbfgs"}}}}), ConfigError);
    REQUIRE_THROWS_AS(config_from_json(json{{"attacks", {{"kinds", {"cw"}}}}}), ConfigError);
    REQUIRE_THROWS_AS(config_from_json(json{{"attacks", {{"epsilons", json::array()}}}}),
                      ConfigError);
    REQUIRE_THROWS_AS(config_from_json(json{{"attacks", {{"epsilons", {-0.1}}}}}), ConfigError);
    REQUIRE_THROWS_AS(config_from_json(json{{"train", {{"epochs", "three"}}}}), ConfigError);
}

TEST_CASE("configs survive a json round trip") {
    ExperimentConfig cfg = tiny_classical("some-out");
    cfg.attacks.kinds = {AttackKind::Pgd, AttackKind::Fgsm};
    cfg.attacks.epsilons = {0.1, 0.2};
    cfg.train.optimizer = Optimizer::Sgd;
    cfg.xpress.bins = 42;

    const ExperimentConfig back = config_from_json(config_to_json(cfg));
    REQUIRE(back.model_name == cfg.model_name);
    REQUIRE(back.out_dir == cfg.out_dir);
    REQUIRE(back.data.source == cfg.data.source);
    REQUIRE(back.data.count == cfg.data.count);
    REQUIRE(back.split_ratios == cfg.split_ratios);
    REQUIRE(back.model.computation == cfg.model.computation);
    REQUIRE(back.model.extractor == cfg.model.extractor);
    REQUIRE(back.train.optimizer == Optimizer::Sgd);
    REQUIRE(back.attacks.kinds == cfg.attacks.kinds);
    REQUIRE(back.attacks.epsilons == cfg.attacks.epsilons);
    REQUIRE(back.xpress.bins == 42);
}

TEST_CASE("load_config distinguishes bad json from bad values") {
    const std::string path = "tmp_exp_config.json";
    write_text_file(path, "{ nope");
    REQUIRE_THROWS_AS(load_config(path), FormatError);
    write_text_file(path, "{\"bogus_key\": true}");
    REQUIRE_THROWS_AS(load_config(path), ConfigError);
    write_text_file(path, "{\"model_name\": \"ok\"}");
    REQUIRE(load_config(path).model_name == "ok");
    fs::remove(path);
}

TEST_CASE("extractor and data source must agree") {
    TempDir tmp("tmp_exp_mismatch");

    // file-features without features-csv data
    ExperimentConfig a = tiny_classical(tmp.path);
    a.model.extractor = ExtractorKind::FileFeatures;
    REQUIRE_THROWS_AS(run_experiment(a), ConfigError);
    REQUIRE(!fs::exists(tmp.path + "/.qadv-lock"));

    // features-csv data without file-features
    const std::string csv = tmp.path + "_f.csv";
    write_text_file(csv, "0.1,0.2,0\n0.9,0.8,1\n0.15,0.2,0\n0.85,0.8,1\n");
    ExperimentConfig b = tiny_classical(tmp.path);
    b.data.source = "features-csv";
    b.data.path = csv;
    b.model.extractor = ExtractorKind::Linear;
    REQUIRE_THROWS_AS(run_experiment(b), ConfigError);
    fs::remove(csv);
}

TEST_CASE("directory data with mixed image sizes is refused") {
    TempDir tmp("tmp_exp_mixed");
    const std::string data_dir = tmp.path + "/data";
    PatchDataset ds = generate_synthetic(4, 10, 10, 9);
    write_dataset_directory(ds, data_dir);
    // Swap one image for a different size, keeping its label row.
    const PatchDataset other = generate_synthetic(4, 12, 12, 9);
    write_ppm(data_dir + "/sample_00001.ppm", other.samples[0].image);

    ExperimentConfig cfg = tiny_classical(tmp.path + "/out");
    cfg.data.source = "directory";
    cfg.data.path = data_dir;
    REQUIRE_THROWS_AS(run_experiment(cfg), DataError);
}
