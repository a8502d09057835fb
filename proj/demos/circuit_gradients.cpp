// Prints one registry circuit as text, runs it, and cross-checks the adjoint
// gradient of each measurement against the parameter-shift rule.

#include <cmath>
#include <cstdio>
#include <vector>

#include "qadv/adjoint.hpp"
#include "qadv/vqc.hpp"

int main() {
    using namespace qadv;

    const CircuitTemplate t = registry(1);
    const CircuitProgram prog = expand_template(t);
    std::printf("%s\n", program_to_text(prog).c_str());

    std::vector<double> features(prog.feature_count());
    for (std::size_t i = 0; i < features.size(); ++i) {
        features[i] = 0.3 + 0.2 * static_cast<double>(i);
    }
    std::vector<double> weights(prog.weight_count());
    for (std::size_t i = 0; i < weights.size(); ++i) {
        weights[i] = -0.5 + 0.25 * static_cast<double>(i);
    }

    const std::vector<double> exps = run_circuit(prog, features, weights);
    std::printf("expectations:");
    for (double e : exps) {
        std::printf(" %+.6f", e);
    }
    std::printf("\n\n");

    const CircuitJacobians jac = adjoint_gradients(prog, features, weights);
    std::printf("%-8s %-12s %-14s %-14s %-10s\n", "param", "measurement", "adjoint", "shift",
                "|diff|");
    double worst = 0.0;
    for (std::size_t w = 0; w < weights.size(); ++w) {
        const auto shift =
            parameter_shift_gradient(prog, features, weights, ParamRole::Weight, w);
        for (std::size_t m = 0; m < exps.size(); ++m) {
            const double diff = std::fabs(jac.weights[m][w] - shift[m]);
            worst = std::max(worst, diff);
            std::printf("w%-7zu %-12zu %-14.8f %-14.8f %-10.2e\n", w, m, jac.weights[m][w],
                        shift[m], diff);
        }
    }
    std::printf("\nworst adjoint-vs-shift disagreement: %.3e\n", worst);
    return 0;
}
