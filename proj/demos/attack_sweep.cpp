// Trains a small hybrid classifier on synthetic patches and sweeps the three
// attacks over a range of perturbation budgets.

#include <cstdio>

#include "qadv/qadv.hpp"

int main() {
    using namespace qadv;

    PatchDataset ds = generate_synthetic(240, 18, 18, 7);
    assign_splits(ds, {0.8, 0.2}, 11);
    const auto train_set = subset(ds, Split::Train);
    const auto test_set = subset(ds, Split::Test);

    ModelConfig mcfg;
    mcfg.computation = Computation::Hybrid;
    mcfg.extractor = ExtractorKind::SmallCnn;
    mcfg.input_shape = {3, 18, 18};
    mcfg.template_id = 1;
    mcfg.seed = 5;
    HybridModel model = make_model(mcfg);

    TrainConfig tc;
    tc.epochs = 6;
    tc.batch_size = 32;
    tc.learning_rate = 0.01;
    tc.seed = 11;
    std::printf("training on %zu samples...\n", train_set.size());
    train(model, train_set, {}, tc);
    std::printf("clean test accuracy: %.2f%%\n\n", 100.0 * accuracy(model, test_set));

    std::printf("%-8s %-10s %-10s %-10s %-10s\n", "eps", "attack", "acc%", "success%",
                "mean_linf");
    for (double eps : {0.05, 0.1, 0.25}) {
        for (AttackKind kind : {AttackKind::Fgsm, AttackKind::Pgd, AttackKind::DeepFool}) {
            AttackConfig ac;
            ac.kind = kind;
            ac.epsilon = eps;
            const AttackEvaluation ev = evaluate_under_attack(model, test_set, ac);
            std::printf("%-8g %-10s %-10.2f %-10.2f %-10.4f\n", eps,
                        attack_name(kind).c_str(), 100.0 * ev.accuracy,
                        100.0 * ev.success_rate, ev.mean_linf);
        }
    }
    return 0;
}
