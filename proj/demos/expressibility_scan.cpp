// Scans every registry template plus a depth sweep of the 4-qubit ring
// ansatz, printing KL-vs-Haar with standard errors. Smaller KL means the
// circuit's state ensemble looks more Haar-random.

#include <cstdio>

#include "qadv/expressibility.hpp"
#include "qadv/vqc.hpp"

int main() {
    using namespace qadv;
    const std::size_t samples = 2000;
    const int bins = 75;
    const std::uint64_t seed = 42;

    std::printf("registry templates (%zu samples, %d bins)\n", samples, bins);
    std::printf("%-4s %-7s %-6s %-10s %-10s\n", "id", "qubits", "depth", "kl", "se");
    for (int id = 1; id <= 6; ++id) {
        const CircuitTemplate t = registry(id);
        const ExpressibilityResult r = expressibility(t, samples, bins, seed);
        std::printf("%-4d %-7d %-6d %-10.4f %-10.4f\n", id, t.n_qubits, t.depth, r.kl,
                    r.standard_error);
    }

    std::printf("\ndepth sweep of template 1 (4-qubit ring)\n");
    std::printf("%-6s %-10s %-10s\n", "depth", "kl", "se");
    CircuitTemplate t = registry(1);
    for (int depth = 0; depth <= 4; ++depth) {
        t.depth = depth;
        const ExpressibilityResult r = expressibility(t, samples, bins, seed);
        std::printf("%-6d %-10.4f %-10.4f\n", depth, r.kl, r.standard_error);
    }
    return 0;
}
