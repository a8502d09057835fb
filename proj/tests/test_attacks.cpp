#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "qadv/attacks.hpp"
#include "helpers.hpp"

using namespace qadv;

namespace {

ModelConfig feature_cfg(int dim = 2) {
    ModelConfig cfg;
    cfg.computation = Computation::Classical;
    cfg.extractor = ExtractorKind::FileFeatures;
    cfg.input_shape = {static_cast<std::size_t>(dim)};
    cfg.hidden_dim = 8;
    cfg.seed = 3;
    return cfg;
}

std::vector<Sample> toy_features(Rng& rng, std::size_t n_per_class) {
    std::vector<Sample> out;
    for (std::size_t i = 0; i < n_per_class; ++i) {
        Tensor a({2}, {0.25 + rng.uniform(-0.05, 0.05), 0.25 + rng.uniform(-0.05, 0.05)});
        Tensor b({2}, {0.75 + rng.uniform(-0.05, 0.05), 0.75 + rng.uniform(-0.05, 0.05)});
        out.push_back({std::move(a), 0});
        out.push_back({std::move(b), 1});
    }
    return out;
}

HybridModel trained_toy_model(std::vector<Sample>& data) {
    Rng rng(61);
    data = toy_features(rng, 15);
    HybridModel m = make_model(feature_cfg());
    TrainConfig tc;
    tc.epochs = 25;
    tc.batch_size = 6;
    tc.learning_rate = 0.05;
    train(m, data, {}, tc);
    return m;
}

// A model that is affine on the whole unit square: the hidden relu is kept
// active by a large positive bias. That bias leaks a big constant into the
// margin, so recenter the decision boundary onto the middle of the square.
HybridModel affine_model() {
    HybridModel m = make_model(feature_cfg());
    Rng rng(62);
    for (std::size_t i = 0; i < m.pre.w.numel(); ++i) m.pre.w[i] = rng.uniform(-0.5, 0.5);
    m.pre.b.fill(10.0);
    for (std::size_t i = 0; i < m.out.w.numel(); ++i) m.out.w[i] = rng.uniform(-1.0, 1.0);
    m.out.b = Tensor({2}, {0.05, -0.02});
    const Tensor center({2}, {0.5, 0.5});
    double fc = 0.0;
    logit_margin_gradient(m, center, &fc);
    m.out.b[1] -= fc;
    return m;
}

// Margin gradient of the affine model, computed by hand.
Tensor affine_margin_weights(const HybridModel& m) {
    Tensor w({2});
    for (std::size_t i = 0; i < 2; ++i) {
        double acc = 0.0;
        for (std::size_t h = 0; h < m.pre.w.dim(0); ++h) {
            acc += (m.out.w.at(1, h) - m.out.w.at(0, h)) * m.pre.w.at(h, i);
        }
        w[i] = acc;
    }
    return w;
}

} // namespace

TEST_CASE("input gradients agree with finite differences") {
    std::vector<Sample> data;
    const HybridModel m = trained_toy_model(data);
    const Tensor& x = data[0].image;

    double loss0 = 0.0;
    const Tensor g = input_loss_gradient(m, x, data[0].label, &loss0);
    REQUIRE(g.shape() == x.shape());
    const double h = 1e-6;
    for (std::size_t i = 0; i < x.numel(); ++i) {
        Tensor xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        double lp = 0.0, lm = 0.0;
        input_loss_gradient(m, xp, data[0].label, &lp);
        input_loss_gradient(m, xm, data[0].label, &lm);
        REQUIRE(relative_error(g[i], (lp - lm) / (2.0 * h)) < 1e-6);
    }

    double f0 = 0.0;
    const Tensor w = logit_margin_gradient(m, x, &f0);
    const Tensor lg = forward(m, x);
    REQUIRE(f0 == lg[1] - lg[0]);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        Tensor xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        double fp = 0.0, fm = 0.0;
        logit_margin_gradient(m, xp, &fp);
        logit_margin_gradient(m, xm, &fm);
        REQUIRE(relative_error(w[i], (fp - fm) / (2.0 * h)) < 1e-6);
    }
}

TEST_CASE("fgsm with a zero budget returns the input bit for bit") {
    std::vector<Sample> data;
    const HybridModel m = trained_toy_model(data);
    for (const Sample& s : data) {
        const Tensor adv = fgsm(m, s.image, s.label, 0.0);
        REQUIRE(max_abs_diff(adv, s.image) == 0.0);
    }
}

TEST_CASE("fgsm never exceeds the budget or leaves the pixel range") {
    std::vector<Sample> data;
    const HybridModel m = trained_toy_model(data);
    for (double eps : {0.05, 0.25, 0.9}) {
        for (const Sample& s : data) {
            const Tensor adv = fgsm(m, s.image, s.label, eps);
            REQUIRE(max_abs_diff(adv, s.image) <= eps + 1e-15);
            for (std::size_t i = 0; i < adv.numel(); ++i) {
                REQUIRE(adv[i] >= 0.0);
                REQUIRE(adv[i] <= 1.0);
            }
        }
    }
}

TEST_CASE("single-step pgd with alpha equal to epsilon reproduces fgsm") {
    std::vector<Sample> data;
    const HybridModel m = trained_toy_model(data);
    AttackConfig cfg;
    cfg.kind = AttackKind::Pgd;
    cfg.epsilon = 0.25;
    cfg.pgd_steps = 1;
    cfg.pgd_alpha = 0.25;
    for (const Sample& s : data) {
        const Tensor a = pgd(m, s.image, s.label, cfg);
        const Tensor b = fgsm(m, s.image, s.label, cfg.epsilon);
        for (std::size_t i = 0; i < a.numel(); ++i) {
            REQUIRE(a[i] == b[i]);
        }
    }
}

TEST_CASE("pgd stays inside the ball, with and without a random start") {
    std::vector<Sample> data;
    const HybridModel m = trained_toy_model(data);
    AttackConfig cfg;
    cfg.kind = AttackKind::Pgd;
    cfg.epsilon = 0.1;
    for (bool random_start : {false, true}) {
        cfg.pgd_random_start = random_start;
        cfg.pgd_seed = 9;
        for (const Sample& s : data) {
            const Tensor adv = pgd(m, s.image, s.label, cfg);
            REQUIRE(max_abs_diff(adv, s.image) <= cfg.epsilon + 1e-15);
            for (std::size_t i = 0; i < adv.numel(); ++i) {
                REQUIRE(adv[i] >= 0.0);
                REQUIRE(adv[i] <= 1.0);
            }
        }
    }
}

TEST_CASE("pgd random starts are reproducible from the seed") {
    std::vector<Sample> data;
    const HybridModel m = trained_toy_model(data);
    AttackConfig cfg;
    cfg.kind = AttackKind::Pgd;
    cfg.epsilon = 0.1;
    cfg.pgd_random_start = true;
    cfg.pgd_seed = 12;
    const Tensor a = pgd(m, data[0].image, data[0].label, cfg);
    const Tensor b = pgd(m, data[0].image, data[0].label, cfg);
    REQUIRE(max_abs_diff(a, b) == 0.0);
}

TEST_CASE("pgd with a zero budget is an identity up to pixel clipping") {
    std::vector<Sample> data;
    const HybridModel m = trained_toy_model(data);
    AttackConfig cfg;
    cfg.kind = AttackKind::Pgd;
    cfg.epsilon = 0.0;
    const Tensor adv = pgd(m, data[0].image, data[0].label, cfg);
    REQUIRE(max_abs_diff(adv, data[0].image) == 0.0);
}

TEST_CASE("ten pgd steps raise the loss at least as much as one fgsm step") {
    std::vector<Sample> data;
    const HybridModel m = trained_toy_model(data);
    AttackConfig cfg;
    cfg.kind = AttackKind::Pgd;
    cfg.epsilon = 0.15;

    double fgsm_mean = 0.0, pgd_mean = 0.0;
    std::size_t pgd_wins = 0;
    for (const Sample& s : data) {
        double lf = 0.0, lp = 0.0;
        input_loss_gradient(m, fgsm(m, s.image, s.label, cfg.epsilon), s.label, &lf);
        input_loss_gradient(m, pgd(m, s.image, s.label, cfg), s.label, &lp);
        fgsm_mean += lf;
        pgd_mean += lp;
        if (lp >= lf - 1e-12) {
            ++pgd_wins;
        }
    }
    REQUIRE(pgd_mean >= fgsm_mean);
    REQUIRE(pgd_wins * 10 >= data.size() * 8); // at least 80% of samples
}

TEST_CASE("deepfool finds the closed-form step on an affine model") {
    const HybridModel m = affine_model();
    const Tensor w = affine_margin_weights(m);
    AttackConfig cfg;
    cfg.kind = AttackKind::DeepFool;
    cfg.epsilon = 10.0; // never binds here

    double wnorm_sq = 0.0;
    for (std::size_t i = 0; i < w.numel(); ++i) wnorm_sq += w[i] * w[i];
    REQUIRE(wnorm_sq > 1e-8);

    for (double x0 : {0.3, 0.5, 0.7}) {
        const Tensor x({2}, {x0, 1.0 - x0});
        double f0 = 0.0;
        logit_margin_gradient(m, x, &f0);

        const DeepFoolResult res = deepfool(m, x, cfg);
        REQUIRE(!res.stagnated);
        REQUIRE(res.flipped);
        for (std::size_t i = 0; i < 2; ++i) {
            const double expected =
                x[i] + (1.0 + cfg.deepfool_overshoot) * (-f0) * w[i] / wnorm_sq;
            REQUIRE(relative_error(res.x_adv[i], expected) < 1e-6);
        }
    }
}

TEST_CASE("deepfool flags a flat margin as stagnation and leaves the input alone") {
    HybridModel m = affine_model();
    m.out.w.fill(0.0); // both logits identical everywhere
    AttackConfig cfg;
    cfg.kind = AttackKind::DeepFool;
    const Tensor x({2}, {0.4, 0.6});
    const DeepFoolResult res = deepfool(m, x, cfg);
    REQUIRE(res.stagnated);
    REQUIRE(!res.flipped);
    REQUIRE(max_abs_diff(res.x_adv, x) == 0.0);
}

TEST_CASE("deepfool honors the perturbation budget") {
    std::vector<Sample> data;
    const HybridModel m = trained_toy_model(data);
    AttackConfig cfg;
    cfg.kind = AttackKind::DeepFool;
    cfg.epsilon = 0.01;
    for (const Sample& s : data) {
        const DeepFoolResult res = deepfool(m, s.image, cfg);
        REQUIRE(max_abs_diff(res.x_adv, s.image) <= cfg.epsilon + 1e-15);
    }
}

TEST_CASE("deepfool with zero iterations allowed returns the input") {
    const HybridModel m = affine_model();
    AttackConfig cfg;
    cfg.kind = AttackKind::DeepFool;
    cfg.deepfool_max_iter = 0;
    const Tensor x({2}, {0.4, 0.6});
    const DeepFoolResult res = deepfool(m, x, cfg);
    REQUIRE(max_abs_diff(res.x_adv, x) == 0.0);
    REQUIRE(res.iterations == 0);
}

TEST_CASE("attacks never modify the model they probe") {
    std::vector<Sample> data;
    HybridModel m = trained_toy_model(data);
    std::vector<Tensor> before;
    for (Tensor* p : m.parameters()) before.push_back(*p);

    AttackConfig cfg;
    cfg.epsilon = 0.2;
    for (AttackKind k : {AttackKind::Fgsm, AttackKind::Pgd, AttackKind::DeepFool}) {
        cfg.kind = k;
        run_attack(m, data[0].image, data[0].label, cfg);
    }
    auto params = m.parameters();
    for (std::size_t i = 0; i < params.size(); ++i) {
        REQUIRE(max_abs_diff(before[i], *params[i]) == 0.0);
    }
}

TEST_CASE("attack evaluation reports consistent aggregates") {
    std::vector<Sample> data;
    const HybridModel m = trained_toy_model(data);
    AttackConfig cfg;
    cfg.kind = AttackKind::Fgsm;
    cfg.epsilon = 0.15;
    const AttackEvaluation ev = evaluate_under_attack(m, data, cfg);

    REQUIRE(ev.clean_accuracy == accuracy(m, data));
    REQUIRE(ev.adversarial.size() == data.size());
    REQUIRE(ev.max_linf <= cfg.epsilon + 1e-15);
    REQUIRE(ev.mean_linf <= ev.max_linf + 1e-15);
    REQUIRE(ev.accuracy >= 0.0);
    REQUIRE(ev.accuracy <= 1.0);
    REQUIRE(ev.success_rate >= 0.0);
    REQUIRE(ev.success_rate <= 1.0);

    cfg.epsilon = 0.0;
    const AttackEvaluation ez = evaluate_under_attack(m, data, cfg);
    REQUIRE(ez.accuracy == ez.clean_accuracy);
    REQUIRE(ez.max_linf == 0.0);
    REQUIRE(ez.success_rate == 0.0);

    REQUIRE_THROWS_AS(evaluate_under_attack(m, {}, cfg), DataError);
}

TEST_CASE("attack parameter validation") {
    std::vector<Sample> data;
    const HybridModel m = trained_toy_model(data);
    const Tensor& x = data[0].image;
    AttackConfig cfg;

    REQUIRE_THROWS_AS(fgsm(m, x, 0, -0.1), ConfigError);
    cfg.kind = AttackKind::Pgd;
    cfg.epsilon = -1.0;
    REQUIRE_THROWS_AS(pgd(m, x, 0, cfg), ConfigError);
    cfg.epsilon = 0.1;
    cfg.pgd_steps = 0;
    REQUIRE_THROWS_AS(pgd(m, x, 0, cfg), ConfigError);
    cfg.pgd_steps = 10;

    cfg.kind = AttackKind::DeepFool;
    cfg.epsilon = -0.5;
    REQUIRE_THROWS_AS(deepfool(m, x, cfg), ConfigError);
    cfg.epsilon = 0.1;
    cfg.deepfool_max_iter = -1;
    REQUIRE_THROWS_AS(deepfool(m, x, cfg), ConfigError);
    cfg.deepfool_max_iter = 50;
    cfg.deepfool_overshoot = -0.01;
    REQUIRE_THROWS_AS(deepfool(m, x, cfg), ConfigError);
}

TEST_CASE("attack names round-trip") {
    for (AttackKind k : {AttackKind::Fgsm, AttackKind::Pgd, AttackKind::DeepFool}) {
        REQUIRE(attack_from_name(attack_name(k)) == k);
    }
    REQUIRE_THROWS_AS(attack_from_name("cw"), ConfigError);
}
