#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "qadv/circuit.hpp"
#include "qadv/errors.hpp"
#include "qadv/rng.hpp"
#include "qadv/vqc.hpp"

namespace qadv {

struct FidelityHistogram {
    int bins = 0;
    std::size_t samples = 0;
    std::vector<std::size_t> counts; // bins entries over [0,1]
};

// Draws S pairs of weight vectors i.i.d. uniform over [0, 2pi) per entry,
// runs the template's circuit on both, and histograms the state overlap
// F = |<psi_1|psi_2>|^2 into B equal bins over [0,1]. Bins are half-open with
// the last bin closed. Features are held at zero unless sample_features is
// set, in which case raw features are drawn uniform in [-2, 2] per pair
// (independently for the two states) and squashed as usual.
inline FidelityHistogram sample_fidelities(const CircuitTemplate& tmpl, std::size_t samples,
                                           int bins, std::uint64_t seed,
                                           bool sample_features = false) {
    if (samples < 1) {
        throw ConfigError("fidelity sampling needs at least 1 pair");
    }
    if (bins < 1) {
        throw ConfigError("fidelity histogram needs at least 1 bin");
    }
    const CircuitProgram prog = expand_template(tmpl);
    const std::size_t nw = prog.weight_count();
    const std::size_t nf = prog.feature_count();
    Rng rng(seed);

    FidelityHistogram hist;
    hist.bins = bins;
    hist.samples = samples;
    hist.counts.assign(static_cast<std::size_t>(bins), 0);

    std::vector<double> w1(nw), w2(nw), a1(nf, 0.0), a2(nf, 0.0);
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t i = 0; i < nw; ++i) {
            w1[i] = rng.uniform(0.0, 2.0 * M_PI);
        }
        for (std::size_t i = 0; i < nw; ++i) {
            w2[i] = rng.uniform(0.0, 2.0 * M_PI);
        }
        if (sample_features) {
            for (std::size_t i = 0; i < nf; ++i) {
                a1[i] = embedding_angle(rng.uniform(-2.0, 2.0));
            }
            for (std::size_t i = 0; i < nf; ++i) {
                a2[i] = embedding_angle(rng.uniform(-2.0, 2.0));
            }
        }
        const Statevector s1 = run_statevector(prog, a1, w1);
        const Statevector s2 = run_statevector(prog, a2, w2);
        double f = std::norm(inner_product(s1, s2));
        f = std::min(1.0, std::max(0.0, f));
        std::size_t b = static_cast<std::size_t>(f * bins);
        if (b >= static_cast<std::size_t>(bins)) {
            b = static_cast<std::size_t>(bins) - 1; // f == 1.0 lands in the last bin
        }
        ++hist.counts[b];
    }
    return hist;
}

// Probability a Haar-random pure state pair in dimension N = 2^n lands in
// fidelity bin b of B: P(F in [lo,hi]) = (1-lo)^(N-1) - (1-hi)^(N-1).
inline double haar_bin_mass(int bin, int bins, int n_qubits) {
    if (bin < 0 || bin >= bins) {
        throw ConfigError("haar_bin_mass: bin out of range");
    }
    const double N = std::pow(2.0, n_qubits);
    const double lo = static_cast<double>(bin) / bins;
    const double hi = static_cast<double>(bin + 1) / bins;
    return std::pow(1.0 - lo, N - 1.0) - std::pow(1.0 - hi, N - 1.0);
}

struct ExpressibilityResult {
    int template_id = 0;
    int n_qubits = 0;
    std::size_t samples = 0;
    int bins = 0;
    std::uint64_t seed = 0;
    double kl = 0.0;             // KL(empirical || Haar), natural log
    double standard_error = 0.0; // multinomial delta-method estimate
};

// KL divergence of the sampled fidelity histogram from the Haar prediction.
// Empty bins contribute zero (p log p -> 0). Lower KL means the ensemble
// covers state space more like Haar; a parameter-independent circuit
// concentrates all mass in the top bin and maxes out at -log(q_top), which
// grows with both B and the Hilbert dimension.
inline ExpressibilityResult expressibility(const CircuitTemplate& tmpl, std::size_t samples = 5000,
                                           int bins = 75, std::uint64_t seed = 12345,
                                           bool sample_features = false) {
    if (samples < 1000) {
        throw ConfigError("expressibility needs at least 1000 sample pairs, got " +
                          std::to_string(samples));
    }
    if (bins < 10) {
        throw ConfigError("expressibility needs at least 10 bins, got " + std::to_string(bins));
    }
    const FidelityHistogram hist = sample_fidelities(tmpl, samples, bins, seed, sample_features);
    double kl = 0.0;
    double second = 0.0; // E[log^2(p/q)] under p, for the delta-method SE
    for (int b = 0; b < bins; ++b) {
        const std::size_t c = hist.counts[static_cast<std::size_t>(b)];
        if (c == 0) {
            continue;
        }
        const double p = static_cast<double>(c) / static_cast<double>(samples);
        const double q = haar_bin_mass(b, bins, tmpl.n_qubits);
        const double lr = std::log(p / q);
        kl += p * lr;
        second += p * lr * lr;
    }
    ExpressibilityResult res;
    res.template_id = tmpl.id;
    res.n_qubits = tmpl.n_qubits;
    res.samples = samples;
    res.bins = bins;
    res.seed = seed;
    res.kl = kl;
    const double var = std::max(0.0, second - kl * kl);
    res.standard_error = std::sqrt(var / static_cast<double>(samples));
    return res;
}

} // namespace qadv
