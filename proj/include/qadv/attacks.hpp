#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qadv/autodiff.hpp"
#include "qadv/errors.hpp"
#include "qadv/model.hpp"
#include "qadv/rng.hpp"
#include "qadv/tensor.hpp"

namespace qadv {

enum class AttackKind { Fgsm, Pgd, DeepFool };

inline std::string attack_name(AttackKind k) {
    switch (k) {
        case AttackKind::Fgsm: return "fgsm";
        case AttackKind::Pgd: return "pgd";
        case AttackKind::DeepFool: return "deepfool";
    }
    return "?";
}

inline AttackKind attack_from_name(const std::string& s) {
    if (s == "fgsm") return AttackKind::Fgsm;
    if (s == "pgd") return AttackKind::Pgd;
    if (s == "deepfool") return AttackKind::DeepFool;
    throw ConfigError("unknown attack '" + s + "' (fgsm, pgd, deepfool)");
}

struct AttackConfig {
    AttackKind kind = AttackKind::Fgsm;
    double epsilon = 0.25;      // L-infinity budget in pixel units
    int pgd_steps = 10;
    double pgd_alpha = -1.0;    // <= 0 means the default epsilon/4
    bool pgd_random_start = false;
    std::uint64_t pgd_seed = 0;
    int deepfool_max_iter = 50;
    double deepfool_overshoot = 0.02;
};

inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

inline Tensor clip01(Tensor x) {
    for (std::size_t i = 0; i < x.numel(); ++i) {
        x[i] = std::min(1.0, std::max(0.0, x[i]));
    }
    return x;
}

// Project onto the L-infinity ball of radius eps around `center`, then onto
// the valid pixel range, in that order.
inline Tensor project_ball(Tensor x, const Tensor& center, double eps) {
    for (std::size_t i = 0; i < x.numel(); ++i) {
        x[i] = std::min(center[i] + eps, std::max(center[i] - eps, x[i]));
        x[i] = std::min(1.0, std::max(0.0, x[i]));
    }
    return x;
}

// d(loss)/d(input pixels) for the cross-entropy against the true label.
inline Tensor input_loss_gradient(const HybridModel& m, const Tensor& x, int label,
                                  double* loss_out = nullptr) {
    Tape tape;
    const ForwardNodes fn = forward_on_tape(m, tape, x);
    const NodeId loss = tape.softmax_cross_entropy(fn.logits, label);
    if (loss_out) {
        *loss_out = tape.value(loss)[0];
    }
    tape.backward(loss);
    return tape.grad(fn.input);
}

// Value and input gradient of f(x) = logit_1 - logit_0, the signed margin
// whose zero set is the decision boundary.
inline Tensor logit_margin_gradient(const HybridModel& m, const Tensor& x, double* value_out) {
    Tape tape;
    const ForwardNodes fn = forward_on_tape(m, tape, x);
    const NodeId margin = tape.custom(
        {fn.logits}, Tensor::scalar(tape.value(fn.logits)[1] - tape.value(fn.logits)[0]),
        [](const Tensor& up) {
            Tensor g({2});
            g[0] = -up[0];
            g[1] = up[0];
            return std::vector<Tensor>{std::move(g)};
        });
    if (value_out) {
        *value_out = tape.value(margin)[0];
    }
    tape.backward(margin);
    return tape.grad(fn.input);
}

// Single-step gradient sign attack: x + eps * sign(grad), clipped to [0,1].
// sign(0) is 0, so eps = 0 returns the input bit for bit.
inline Tensor fgsm(const HybridModel& m, const Tensor& x, int label, double eps) {
    if (eps < 0.0) {
        throw ConfigError("fgsm: epsilon must be >= 0, got " + std::to_string(eps));
    }
    const Tensor g = input_loss_gradient(m, x, label);
    Tensor adv = x;
    for (std::size_t i = 0; i < adv.numel(); ++i) {
        adv[i] = std::min(1.0, std::max(0.0, adv[i] + eps * sign0(g[i])));
    }
    return adv;
}

// Iterated gradient sign with per-step projection back to the eps ball and
// the pixel range. steps=1 with alpha=eps reproduces fgsm exactly.
inline Tensor pgd(const HybridModel& m, const Tensor& x, int label, const AttackConfig& cfg) {
    if (cfg.epsilon < 0.0) {
        throw ConfigError("pgd: epsilon must be >= 0, got " + std::to_string(cfg.epsilon));
    }
    if (cfg.pgd_steps < 1) {
        throw ConfigError("pgd: steps must be >= 1, got " + std::to_string(cfg.pgd_steps));
    }
    if (cfg.epsilon == 0.0) {
        return clip01(x); // zero-radius ball: nothing can move
    }
    const double alpha = cfg.pgd_alpha > 0.0 ? cfg.pgd_alpha : cfg.epsilon / 4.0;
    if (alpha <= 0.0) {
        throw ConfigError("pgd: step size must be > 0, got " + std::to_string(alpha));
    }
    Tensor cur = x;
    if (cfg.pgd_random_start) {
        Rng rng(cfg.pgd_seed);
        for (std::size_t i = 0; i < cur.numel(); ++i) {
            cur[i] += rng.uniform(-cfg.epsilon, cfg.epsilon);
        }
        cur = project_ball(std::move(cur), x, cfg.epsilon);
    }
    for (int step = 0; step < cfg.pgd_steps; ++step) {
        const Tensor g = input_loss_gradient(m, cur, label);
        for (std::size_t i = 0; i < cur.numel(); ++i) {
            cur[i] += alpha * sign0(g[i]);
        }
        cur = project_ball(std::move(cur), x, cfg.epsilon);
    }
    return cur;
}

struct DeepFoolResult {
    Tensor x_adv;
    int iterations = 0;
    bool flipped = false;   // prediction changed before overshoot
    bool stagnated = false; // margin gradient vanished; sample left unperturbed
};

// Minimal-perturbation attack for the binary head: walk to the locally
// linearized decision boundary until the prediction flips, overshoot by
// (1 + overshoot), then clamp into the eps ball and pixel range. Labels are
// not used; the walk starts from the model's own prediction.
inline DeepFoolResult deepfool(const HybridModel& m, const Tensor& x, const AttackConfig& cfg) {
    if (cfg.epsilon < 0.0) {
        throw ConfigError("deepfool: epsilon must be >= 0, got " + std::to_string(cfg.epsilon));
    }
    if (cfg.deepfool_max_iter < 0) {
        throw ConfigError("deepfool: max iterations must be >= 0");
    }
    if (cfg.deepfool_overshoot < 0.0) {
        throw ConfigError("deepfool: overshoot must be >= 0");
    }
    DeepFoolResult res;
    const int orig = predict(m, x).cls;
    Tensor cur = x;
    Tensor total(x.shape());
    for (int it = 0; it < cfg.deepfool_max_iter; ++it) {
        double f = 0.0;
        const Tensor w = logit_margin_gradient(m, cur, &f);
        double wnorm_sq = 0.0;
        for (std::size_t i = 0; i < w.numel(); ++i) {
            wnorm_sq += w[i] * w[i];
        }
        if (std::sqrt(wnorm_sq) < 1e-12) {
            res.stagnated = true;
            res.x_adv = x;
            return res;
        }
        // Step to the zero set of the linearization: r = -f w / |w|^2.
        const double scale = -f / wnorm_sq;
        for (std::size_t i = 0; i < cur.numel(); ++i) {
            const double r = scale * w[i];
            total[i] += r;
            cur[i] += r;
        }
        res.iterations = it + 1;
        if (predict(m, cur).cls != orig) {
            res.flipped = true;
            break;
        }
        if (f == 0.0) {
            // Already sitting on the boundary; the overshoot below decides.
            break;
        }
    }
    Tensor adv = x;
    for (std::size_t i = 0; i < adv.numel(); ++i) {
        double d = (1.0 + cfg.deepfool_overshoot) * total[i];
        d = std::min(cfg.epsilon, std::max(-cfg.epsilon, d));
        adv[i] = std::min(1.0, std::max(0.0, adv[i] + d));
    }
    res.x_adv = std::move(adv);
    if (!res.flipped) {
        res.flipped = predict(m, res.x_adv).cls != orig;
    }
    return res;
}

inline Tensor run_attack(const HybridModel& m, const Tensor& x, int label,
                         const AttackConfig& cfg) {
    switch (cfg.kind) {
        case AttackKind::Fgsm: return fgsm(m, x, label, cfg.epsilon);
        case AttackKind::Pgd: return pgd(m, x, label, cfg);
        case AttackKind::DeepFool: return deepfool(m, x, cfg).x_adv;
    }
    throw ConfigError("run_attack: unreachable");
}

struct AttackEvaluation {
    double accuracy = 0.0;     // on adversarial inputs, against true labels
    double clean_accuracy = 0.0;
    double success_rate = 0.0; // flipped predictions among originally-correct samples
    double mean_linf = 0.0;
    double max_linf = 0.0;
    double mean_adv_loss = 0.0;
    std::vector<Tensor> adversarial; // aligned with the input samples
};

inline AttackEvaluation evaluate_under_attack(const HybridModel& m,
                                              const std::vector<Sample>& samples,
                                              const AttackConfig& cfg) {
    if (samples.empty()) {
        throw DataError("attack evaluation over an empty sample set");
    }
    AttackEvaluation ev;
    std::size_t adv_hits = 0, clean_hits = 0, flipped = 0;
    ev.adversarial.reserve(samples.size());
    for (const Sample& s : samples) {
        const int orig = predict(m, s.image).cls;
        Tensor adv = run_attack(m, s.image, s.label, cfg);
        Tape tape;
        const ForwardNodes fn = forward_on_tape(m, tape, adv);
        const NodeId loss = tape.softmax_cross_entropy(fn.logits, s.label);
        const Tensor& lg = tape.value(fn.logits);
        const int post = lg[1] > lg[0] ? 1 : 0;
        ev.mean_adv_loss += tape.value(loss)[0];
        const double linf = max_abs_diff(adv, s.image);
        ev.mean_linf += linf;
        ev.max_linf = std::max(ev.max_linf, linf);
        clean_hits += orig == s.label ? 1 : 0;
        adv_hits += post == s.label ? 1 : 0;
        if (orig == s.label && post != orig) {
            ++flipped;
        }
        ev.adversarial.push_back(std::move(adv));
    }
    const double n = static_cast<double>(samples.size());
    ev.accuracy = static_cast<double>(adv_hits) / n;
    ev.clean_accuracy = static_cast<double>(clean_hits) / n;
    ev.success_rate = clean_hits == 0
                          ? 0.0
                          : static_cast<double>(flipped) / static_cast<double>(clean_hits);
    ev.mean_linf /= n;
    ev.mean_adv_loss /= n;
    return ev;
}

} // namespace qadv
