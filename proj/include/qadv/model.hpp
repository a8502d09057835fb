#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qadv/autodiff.hpp"
#include "qadv/errors.hpp"
#include "qadv/io.hpp"
#include "qadv/rng.hpp"
#include "qadv/tensor.hpp"
#include "qadv/vqc.hpp"

namespace qadv {

struct Sample {
    Tensor image;
    int label = 0;
};

enum class ExtractorKind { SmallCnn, Linear, FileFeatures };
enum class Computation { Classical, Hybrid };

inline std::string extractor_name(ExtractorKind k) {
    switch (k) {
        case ExtractorKind::SmallCnn: return "small-cnn";
        case ExtractorKind::Linear: return "linear";
        case ExtractorKind::FileFeatures: return "file-features";
    }
    return "?";
}

inline ExtractorKind extractor_from_name(const std::string& s) {
    if (s == "small-cnn") return ExtractorKind::SmallCnn;
    if (s == "linear") return ExtractorKind::Linear;
    if (s == "file-features") return ExtractorKind::FileFeatures;
    throw ConfigError("unknown extractor '" + s + "' (small-cnn, linear, file-features)");
}

inline std::string computation_name(Computation c) {
    return c == Computation::Classical ? "classical" : "hybrid";
}

inline Computation computation_from_name(const std::string& s) {
    if (s == "classical") return Computation::Classical;
    if (s == "hybrid") return Computation::Hybrid;
    throw ConfigError("unknown computation kind '" + s + "' (classical, hybrid)");
}

struct ModelConfig {
    Computation computation = Computation::Classical;
    ExtractorKind extractor = ExtractorKind::SmallCnn;
    std::vector<std::size_t> input_shape = {3, 18, 18};
    int feature_dim = 16; // extractor output width; file-features uses the input size
    int hidden_dim = 16;  // classical head width
    int template_id = 1;  // hybrid head circuit, see registry()
    std::uint64_t seed = 1;
};

struct DenseParams {
    Tensor w, b;
};

struct ConvParams {
    Tensor k, b;
};

// Binary classifier: feature extractor, then either a classical dense head or
// a variational-circuit head, then a two-logit output layer.
//
//   small-cnn:  conv 3x3 (C->8) relu pool / conv 3x3 (8->8) relu pool /
//               flatten / dense -> feature_dim / relu
//   linear:     flatten / dense -> feature_dim
//   file-features: identity (input is already a feature vector)
//
//   classical head: dense -> hidden_dim / relu / dense -> 2
//   hybrid head:    dense -> n_qubits / circuit / dense -> 2
struct HybridModel {
    ModelConfig cfg;
    ConvParams conv1, conv2;
    DenseParams extract;
    DenseParams pre;
    std::optional<QnnLayer> qnn;
    DenseParams out;

    std::vector<Tensor*> parameters() {
        std::vector<Tensor*> ps;
        if (cfg.extractor == ExtractorKind::SmallCnn) {
            ps.insert(ps.end(), {&conv1.k, &conv1.b, &conv2.k, &conv2.b});
        }
        if (cfg.extractor != ExtractorKind::FileFeatures) {
            ps.insert(ps.end(), {&extract.w, &extract.b});
        }
        ps.insert(ps.end(), {&pre.w, &pre.b});
        if (qnn) {
            ps.push_back(&qnn->weights);
        }
        ps.insert(ps.end(), {&out.w, &out.b});
        return ps;
    }

    std::vector<const Tensor*> parameters() const {
        auto ps = const_cast<HybridModel*>(this)->parameters();
        return {ps.begin(), ps.end()};
    }

    std::vector<std::string> parameter_names() const {
        std::vector<std::string> names;
        if (cfg.extractor == ExtractorKind::SmallCnn) {
            names.insert(names.end(), {"conv1_k", "conv1_b", "conv2_k", "conv2_b"});
        }
        if (cfg.extractor != ExtractorKind::FileFeatures) {
            names.insert(names.end(), {"extract_w", "extract_b"});
        }
        names.insert(names.end(), {"pre_w", "pre_b"});
        if (qnn) {
            names.push_back("qnn_weights");
        }
        names.insert(names.end(), {"out_w", "out_b"});
        return names;
    }
};

namespace detail {

inline Tensor glorot(Rng& rng, std::vector<std::size_t> shape, std::size_t fan_in,
                     std::size_t fan_out) {
    Tensor t(std::move(shape));
    const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (std::size_t i = 0; i < t.numel(); ++i) {
        t[i] = rng.uniform(-s, s);
    }
    return t;
}

// Spatial size after the two conv+pool stages, or an explanation of why the
// input does not fit.
inline std::size_t cnn_stage_size(std::size_t dim, const char* axis) {
    if (dim < 3) {
        throw DimensionError(std::string("small-cnn: input ") + axis + " " +
                             std::to_string(dim) + " smaller than 3x3 kernel");
    }
    const std::size_t after_conv = dim - 2;
    if (after_conv % 2 != 0) {
        throw DimensionError(std::string("small-cnn: ") + axis + " " + std::to_string(dim) +
                             " leaves odd size " + std::to_string(after_conv) +
                             " before pooling; need " + axis + " % 4 == 2");
    }
    return after_conv / 2;
}

} // namespace detail

inline HybridModel make_model(const ModelConfig& cfg) {
    HybridModel m;
    m.cfg = cfg;
    Rng rng(cfg.seed);

    std::size_t feat = 0;
    switch (cfg.extractor) {
        case ExtractorKind::SmallCnn: {
            if (cfg.input_shape.size() != 3) {
                throw DimensionError("small-cnn expects a [C,H,W] input shape, got " +
                                     Tensor::shape_string(cfg.input_shape));
            }
            const std::size_t C = cfg.input_shape[0];
            std::size_t h = detail::cnn_stage_size(cfg.input_shape[1], "height");
            std::size_t w = detail::cnn_stage_size(cfg.input_shape[2], "width");
            h = detail::cnn_stage_size(h, "pooled height");
            w = detail::cnn_stage_size(w, "pooled width");
            const std::size_t flat = 8 * h * w;
            if (cfg.feature_dim < 1) {
                throw ConfigError("feature_dim must be >= 1");
            }
            m.conv1.k = detail::glorot(rng, {8, C, 3, 3}, C * 9, 8 * 9);
            m.conv1.b = Tensor({8});
            m.conv2.k = detail::glorot(rng, {8, 8, 3, 3}, 8 * 9, 8 * 9);
            m.conv2.b = Tensor({8});
            m.extract.w = detail::glorot(rng, {static_cast<std::size_t>(cfg.feature_dim), flat},
                                         flat, cfg.feature_dim);
            m.extract.b = Tensor({static_cast<std::size_t>(cfg.feature_dim)});
            feat = cfg.feature_dim;
            break;
        }
        case ExtractorKind::Linear: {
            if (cfg.input_shape.empty()) {
                throw DimensionError("linear extractor needs a nonempty input shape");
            }
            const std::size_t flat = Tensor::count(cfg.input_shape);
            if (cfg.feature_dim < 1) {
                throw ConfigError("feature_dim must be >= 1");
            }
            m.extract.w = detail::glorot(rng, {static_cast<std::size_t>(cfg.feature_dim), flat},
                                         flat, cfg.feature_dim);
            m.extract.b = Tensor({static_cast<std::size_t>(cfg.feature_dim)});
            feat = cfg.feature_dim;
            break;
        }
        case ExtractorKind::FileFeatures: {
            if (cfg.input_shape.size() != 1) {
                throw DimensionError("file-features expects a rank-1 input shape, got " +
                                     Tensor::shape_string(cfg.input_shape));
            }
            feat = cfg.input_shape[0];
            break;
        }
    }

    std::size_t head_in = 0;
    if (cfg.computation == Computation::Hybrid) {
        const CircuitTemplate tmpl = registry(cfg.template_id);
        const std::size_t nq = tmpl.feature_count();
        m.pre.w = detail::glorot(rng, {nq, feat}, feat, nq);
        m.pre.b = Tensor({nq});
        m.qnn = make_qnn_layer(tmpl, rng);
        head_in = nq;
    } else {
        if (cfg.hidden_dim < 1) {
            throw ConfigError("hidden_dim must be >= 1");
        }
        const std::size_t hd = cfg.hidden_dim;
        m.pre.w = detail::glorot(rng, {hd, feat}, feat, hd);
        m.pre.b = Tensor({hd});
        head_in = hd;
    }
    m.out.w = detail::glorot(rng, {2, head_in}, head_in, 2);
    m.out.b = Tensor({2});
    return m;
}

struct ForwardNodes {
    NodeId input = 0;
    NodeId logits = 0;
    std::vector<NodeId> params; // aligned with HybridModel::parameters()
};

inline ForwardNodes forward_on_tape(const HybridModel& m, Tape& tape, const Tensor& image) {
    if (image.shape() != m.cfg.input_shape) {
        throw DimensionError("model expects input " + Tensor::shape_string(m.cfg.input_shape) +
                             ", got " + shape_string(image));
    }
    ForwardNodes fn;
    fn.input = tape.leaf(image);

    NodeId feat = 0;
    switch (m.cfg.extractor) {
        case ExtractorKind::SmallCnn: {
            NodeId k1 = tape.leaf(m.conv1.k), b1 = tape.leaf(m.conv1.b);
            NodeId k2 = tape.leaf(m.conv2.k), b2 = tape.leaf(m.conv2.b);
            NodeId ew = tape.leaf(m.extract.w), eb = tape.leaf(m.extract.b);
            fn.params.insert(fn.params.end(), {k1, b1, k2, b2, ew, eb});
            NodeId x = tape.conv2d(fn.input, k1, b1);
            x = tape.relu(x);
            x = tape.maxpool2x2(x);
            x = tape.conv2d(x, k2, b2);
            x = tape.relu(x);
            x = tape.maxpool2x2(x);
            x = tape.flatten(x);
            x = tape.dense(x, ew, eb);
            feat = tape.relu(x);
            break;
        }
        case ExtractorKind::Linear: {
            NodeId ew = tape.leaf(m.extract.w), eb = tape.leaf(m.extract.b);
            fn.params.insert(fn.params.end(), {ew, eb});
            feat = tape.dense(tape.flatten(fn.input), ew, eb);
            break;
        }
        case ExtractorKind::FileFeatures: {
            feat = fn.input;
            break;
        }
    }

    NodeId pw = tape.leaf(m.pre.w), pb = tape.leaf(m.pre.b);
    fn.params.insert(fn.params.end(), {pw, pb});
    NodeId head = tape.dense(feat, pw, pb);
    if (m.cfg.computation == Computation::Hybrid) {
        NodeId qw = tape.leaf(m.qnn->weights);
        fn.params.push_back(qw);
        head = qnn_forward(tape, head, qw, m.qnn->program);
    } else {
        head = tape.relu(head);
    }
    NodeId ow = tape.leaf(m.out.w), ob = tape.leaf(m.out.b);
    fn.params.insert(fn.params.end(), {ow, ob});
    fn.logits = tape.dense(head, ow, ob);
    return fn;
}

inline Tensor forward(const HybridModel& m, const Tensor& image) {
    Tape tape;
    const ForwardNodes fn = forward_on_tape(m, tape, image);
    return tape.value(fn.logits);
}

struct Prediction {
    int cls = 0;
    double confidence = 0.0;
};

// Ties resolve to class 0.
inline Prediction predict(const HybridModel& m, const Tensor& image) {
    const Tensor logits = forward(m, image);
    const auto p = softmax2(logits[0], logits[1]);
    const int cls = p[1] > p[0] ? 1 : 0;
    return {cls, p[cls]};
}

inline double accuracy(const HybridModel& m, const std::vector<Sample>& samples) {
    if (samples.empty()) {
        throw DataError("accuracy over an empty sample set");
    }
    std::size_t hits = 0;
    for (const Sample& s : samples) {
        if (predict(m, s.image).cls == s.label) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(samples.size());
}

enum class Optimizer { Sgd, Adam };

inline std::string optimizer_name(Optimizer o) { return o == Optimizer::Sgd ? "sgd" : "adam"; }

inline Optimizer optimizer_from_name(const std::string& s) {
    if (s == "sgd") return Optimizer::Sgd;
    if (s == "adam") return Optimizer::Adam;
    throw ConfigError("unknown optimizer '" + s + "' (sgd, adam)");
}

struct TrainConfig {
    int epochs = 10;
    int batch_size = 32;
    double learning_rate = 0.01;
    Optimizer optimizer = Optimizer::Adam;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 1;
};

struct EpochStats {
    double train_loss = 0.0;
    double train_acc = 0.0;
    double val_loss = 0.0;
    double val_acc = 0.0;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = -1; // -1: no validation set, final weights kept
    bool used_validation = false;
};

struct LossAcc {
    double loss = 0.0;
    double acc = 0.0;
};

inline LossAcc evaluate_loss_acc(const HybridModel& m, const std::vector<Sample>& samples) {
    if (samples.empty()) {
        throw DataError("evaluate over an empty sample set");
    }
    double loss = 0.0;
    std::size_t hits = 0;
    for (const Sample& s : samples) {
        Tape tape;
        const ForwardNodes fn = forward_on_tape(m, tape, s.image);
        const NodeId l = tape.softmax_cross_entropy(fn.logits, s.label);
        loss += tape.value(l)[0];
        const Tensor& lg = tape.value(fn.logits);
        const int cls = lg[1] > lg[0] ? 1 : 0;
        hits += cls == s.label ? 1 : 0;
    }
    return {loss / static_cast<double>(samples.size()),
            static_cast<double>(hits) / static_cast<double>(samples.size())};
}

// Mini-batch training with mean-over-batch gradients. Sample order is
// reshuffled every epoch from cfg.seed; all arithmetic is fixed-order, so a
// given (model seed, data, config) triple always produces the same history.
// With a validation set, the weights from the best-validation-accuracy epoch
// are restored at the end; without one the final weights stand.
inline TrainHistory train(HybridModel& m, const std::vector<Sample>& train_set,
                          const std::vector<Sample>& val_set, const TrainConfig& cfg) {
    if (cfg.epochs < 0) {
        throw ConfigError("epochs must be >= 0");
    }
    if (cfg.batch_size < 1) {
        throw ConfigError("batch_size must be >= 1");
    }
    if (cfg.learning_rate < 0.0) {
        throw ConfigError("learning_rate must be >= 0");
    }
    if (train_set.empty()) {
        throw DataError("training set is empty");
    }
    bool has0 = false, has1 = false;
    for (const Sample& s : train_set) {
        if (s.label == 0) has0 = true;
        if (s.label == 1) has1 = true;
    }
    if (!has0 || !has1) {
        throw DataError("training set contains a single class; need both labels");
    }

    std::vector<Tensor*> params = m.parameters();
    std::vector<Tensor> adam_m, adam_v;
    if (cfg.optimizer == Optimizer::Adam) {
        for (Tensor* p : params) {
            adam_m.push_back(Tensor::zeros_like(*p));
            adam_v.push_back(Tensor::zeros_like(*p));
        }
    }
    std::size_t adam_t = 0;

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }

    TrainHistory hist;
    hist.used_validation = !val_set.empty();
    double best_val_acc = -1.0;
    std::vector<Tensor> best_params;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size();
             start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop =
                std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            std::vector<Tensor> grads;
            for (Tensor* p : params) {
                grads.push_back(Tensor::zeros_like(*p));
            }
            for (std::size_t bi = start; bi < stop; ++bi) {
                const Sample& s = train_set[order[bi]];
                Tape tape;
                const ForwardNodes fn = forward_on_tape(m, tape, s.image);
                const NodeId loss = tape.softmax_cross_entropy(fn.logits, s.label);
                tape.backward(loss);
                for (std::size_t pi = 0; pi < params.size(); ++pi) {
                    grads[pi] += tape.grad(fn.params[pi]);
                }
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (Tensor& g : grads) {
                g *= inv;
            }
            if (cfg.optimizer == Optimizer::Sgd) {
                for (std::size_t pi = 0; pi < params.size(); ++pi) {
                    for (std::size_t i = 0; i < params[pi]->numel(); ++i) {
                        (*params[pi])[i] -= cfg.learning_rate * grads[pi][i];
                    }
                }
            } else {
                ++adam_t;
                const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(adam_t));
                const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(adam_t));
                for (std::size_t pi = 0; pi < params.size(); ++pi) {
                    for (std::size_t i = 0; i < params[pi]->numel(); ++i) {
                        const double g = grads[pi][i];
                        adam_m[pi][i] = cfg.adam_beta1 * adam_m[pi][i] + (1.0 - cfg.adam_beta1) * g;
                        adam_v[pi][i] =
                            cfg.adam_beta2 * adam_v[pi][i] + (1.0 - cfg.adam_beta2) * g * g;
                        const double mh = adam_m[pi][i] / bc1;
                        const double vh = adam_v[pi][i] / bc2;
                        (*params[pi])[i] -= cfg.learning_rate * mh / (std::sqrt(vh) + cfg.adam_eps);
                    }
                }
            }
        }

        EpochStats st;
        const LossAcc tr = evaluate_loss_acc(m, train_set);
        st.train_loss = tr.loss;
        st.train_acc = tr.acc;
        if (hist.used_validation) {
            const LossAcc va = evaluate_loss_acc(m, val_set);
            st.val_loss = va.loss;
            st.val_acc = va.acc;
            if (va.acc > best_val_acc) {
                best_val_acc = va.acc;
                hist.best_epoch = epoch;
                best_params.clear();
                for (Tensor* p : params) {
                    best_params.push_back(*p);
                }
            }
        }
        hist.epochs.push_back(st);
    }

    if (hist.used_validation && !best_params.empty()) {
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            *params[pi] = best_params[pi];
        }
    }
    return hist;
}

// ---- checkpoints ----

inline constexpr const char* kCheckpointMagic = "qadv-checkpoint";
inline constexpr int kCheckpointVersion = 1;

inline void save_checkpoint(const HybridModel& m, const std::string& path) {
    nlohmann::json j;
    j["magic"] = kCheckpointMagic;
    j["version"] = kCheckpointVersion;
    j["computation"] = computation_name(m.cfg.computation);
    j["extractor"] = extractor_name(m.cfg.extractor);
    j["input_shape"] = m.cfg.input_shape;
    j["feature_dim"] = m.cfg.feature_dim;
    j["hidden_dim"] = m.cfg.hidden_dim;
    j["template_id"] = m.cfg.template_id;
    j["seed"] = m.cfg.seed;
    nlohmann::json params = nlohmann::json::object();
    const auto names = m.parameter_names();
    const auto tensors = m.parameters();
    for (std::size_t i = 0; i < names.size(); ++i) {
        params[names[i]] = {{"shape", tensors[i]->shape()}, {"data", tensors[i]->raw()}};
    }
    j["params"] = std::move(params);
    write_text_file(path, j.dump());
}

inline HybridModel load_checkpoint(const std::string& path) {
    const std::string text = read_text_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint '" + path + "' is not valid JSON: " + e.what());
    }
    try {
        if (!j.contains("magic") || j["magic"] != kCheckpointMagic) {
            throw FormatError("checkpoint '" + path + "' missing magic '" +
                              std::string(kCheckpointMagic) + "'");
        }
        if (j["version"] != kCheckpointVersion) {
            throw FormatError("checkpoint '" + path + "' has unsupported version");
        }
        ModelConfig cfg;
        cfg.computation = computation_from_name(j["computation"].get<std::string>());
        cfg.extractor = extractor_from_name(j["extractor"].get<std::string>());
        cfg.input_shape = j["input_shape"].get<std::vector<std::size_t>>();
        cfg.feature_dim = j["feature_dim"].get<int>();
        cfg.hidden_dim = j["hidden_dim"].get<int>();
        cfg.template_id = j["template_id"].get<int>();
        cfg.seed = j["seed"].get<std::uint64_t>();
        HybridModel m = make_model(cfg);
        const auto names = m.parameter_names();
        auto tensors = m.parameters();
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (!j["params"].contains(names[i])) {
                throw FormatError("checkpoint '" + path + "' missing parameter '" + names[i] +
                                  "'");
            }
            const auto& pj = j["params"][names[i]];
            const auto shape = pj["shape"].get<std::vector<std::size_t>>();
            auto data = pj["data"].get<std::vector<double>>();
            if (shape != tensors[i]->shape()) {
                throw FormatError("checkpoint '" + path + "' parameter '" + names[i] +
                                  "' has shape " + Tensor::shape_string(shape) + ", expected " +
                                  Tensor::shape_string(tensors[i]->shape()));
            }
            *tensors[i] = Tensor(shape, std::move(data));
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("checkpoint '" + path + "' has malformed fields: " + e.what());
    }
}

} // namespace qadv
