#include "evaluate.h"
#include <functional>

#include <cmath>
#include <cstring>
#include <sstream>

#include "core/parallel.h"

namespace canonify {
namespace {

constexpr std::uint64_t kClfInitKey = 0x636c6669;
constexpr std::uint64_t kClfOrderKey = 0x636c666f;
constexpr std::uint64_t kEvalKey = 0x6576616c;

void copy_image_into(const ImageF& img, Tensor& t, int sample) {
    std::memcpy(t.data.data() + static_cast<size_t>(sample) * img.data.size(), img.data.data(),
                img.data.size() * sizeof(real));
}

int argmax_row(const Tensor& logits, int row) {
    const int k = logits.dim(1);
    const real* p = logits.data.data() + static_cast<std::int64_t>(row) * k;
    int best = 0;
    for (int i = 1; i < k; ++i) {
        if (p[i] > p[best]) best = i;
    }
    return best;
}

// Canonical normalized image of one dataset item.
ImageF canonical_normalized(const Dataset& ds, int index, const RunConfig& cfg,
                            const Normalization& norm) {
    ImageF img = canonical_image(ds.items[static_cast<size_t>(index)].image, cfg.sizes);
    normalize(img, norm);
    return img;
}

double accuracy_over(const std::vector<int>& indices, const Dataset& ds,
                     const TrainedClassifier& tc, const RunConfig& cfg,
                     const std::function<ImageF(int)>& make_input) {
    const int B = 32;
    const int n = static_cast<int>(indices.size());
    std::int64_t correct = 0;
    for (int start = 0; start < n; start += B) {
        const int count = std::min(B, n - start);
        auto x = make_tensor({count, 3, tc.clf.cfg.in_size, tc.clf.cfg.in_size});
        parallel_for_each(count, [&](std::int64_t i) {
            const ImageF img = make_input(indices[static_cast<size_t>(start + i)]);
            copy_image_into(img, *x, static_cast<int>(i));
        });
        auto logits = tc.clf.forward(x);
        for (int i = 0; i < count; ++i) {
            const int label = ds.items[static_cast<size_t>(indices[static_cast<size_t>(
                                  start + i)])].label;
            if (argmax_row(*logits, i) == label) ++correct;
        }
    }
    return static_cast<double>(correct) / n;
}

}  // namespace

TrainedClassifier train_classifier(const Dataset& dataset, const RunConfig& cfg) {
    if (dataset.num_classes() < 2) {
        throw std::invalid_argument("classifier: dataset must have at least 2 classes");
    }
    TrainedClassifier tc;
    tc.norm = compute_normalization(dataset, cfg.sizes);
    tc.class_names = dataset.class_names;

    ClassifierConfig ccfg;
    ccfg.in_size = cfg.sizes.crop_canonical;
    ccfg.num_classes = dataset.num_classes();
    RngStream init_rng(cfg.clf_seed, kClfInitKey);
    tc.clf = Classifier::create(ccfg, init_rng);

    NamedTensors named;
    tc.clf.params("clf", named);
    std::vector<TensorPtr> params;
    for (auto& [n, t] : named.items) params.push_back(t);
    Adam opt(std::move(params), cfg.clf_lr);

    const auto& train_idx = dataset.train_indices;
    const int B = cfg.clf_batch;
    for (int epoch = 0; epoch < cfg.clf_epochs; ++epoch) {
        std::vector<int> order = train_idx;
        RngStream order_rng(cfg.clf_seed, kClfOrderKey, static_cast<std::uint64_t>(epoch));
        order_rng.shuffle(order);
        for (size_t start = 0; start + 1 < order.size(); start += static_cast<size_t>(B)) {
            const int count = static_cast<int>(
                std::min<size_t>(static_cast<size_t>(B), order.size() - start));
            auto x = make_tensor({count, 3, ccfg.in_size, ccfg.in_size});
            std::vector<int> labels(static_cast<size_t>(count));
            parallel_for_each(count, [&](std::int64_t i) {
                const int idx = order[start + static_cast<size_t>(i)];
                copy_image_into(canonical_normalized(dataset, idx, cfg, tc.norm), *x,
                                static_cast<int>(i));
                labels[static_cast<size_t>(i)] = dataset.items[static_cast<size_t>(idx)].label;
            });
            opt.zero_grad();
            backward(softmax_cross_entropy(tc.clf.forward(x), labels));
            opt.step();
        }
    }

    tc.val_top1 = accuracy_over(dataset.val_indices, dataset, tc, cfg, [&](int idx) {
        return canonical_normalized(dataset, idx, cfg, tc.norm);
    });
    if (tc.val_top1 < 0.70) {
        throw std::runtime_error(
            "classifier: validation top-1 " + std::to_string(tc.val_top1) +
            " below 0.70 abort threshold (dataset or configuration defect)");
    }
    return tc;
}

void save_classifier(const std::string& path, const TrainedClassifier& tc, const RunConfig& cfg) {
    CheckpointData ckpt;
    NamedTensors named;
    tc.clf.params("clf", named);
    for (const auto& [name, t] : named.items) ckpt.tensors.add(name, t);
    ckpt.meta["kind"] = "classifier";
    ckpt.meta["config"] = config_to_json(cfg);
    ckpt.meta["classifier"] = {{"in_size", tc.clf.cfg.in_size},
                               {"channels", tc.clf.cfg.channels},
                               {"hidden", tc.clf.cfg.hidden},
                               {"num_classes", tc.clf.cfg.num_classes}};
    ckpt.meta["class_names"] = tc.class_names;
    ckpt.meta["val_top1"] = tc.val_top1;
    ckpt.meta["normalization"] = {
        {"mean", {tc.norm.mean[0], tc.norm.mean[1], tc.norm.mean[2]}},
        {"std", {tc.norm.stdev[0], tc.norm.stdev[1], tc.norm.stdev[2]}}};
    save_checkpoint(path, ckpt);
}

TrainedClassifier load_classifier(const std::string& path) {
    CheckpointData ckpt = load_checkpoint(path);
    if (ckpt.meta.value("kind", "") != "classifier") {
        throw std::runtime_error(path + ": not a classifier checkpoint");
    }
    TrainedClassifier tc;
    const auto& cj = ckpt.meta.at("classifier");
    ClassifierConfig ccfg;
    ccfg.in_size = cj.at("in_size").get<int>();
    ccfg.channels = cj.at("channels").get<std::array<int, 3>>();
    ccfg.hidden = cj.at("hidden").get<int>();
    ccfg.num_classes = cj.at("num_classes").get<int>();
    RngStream rng(0);
    tc.clf = Classifier::create(ccfg, rng);
    NamedTensors named;
    tc.clf.params("clf", named);
    for (auto& [name, t] : named.items) {
        TensorPtr src = ckpt.tensors.find(name);
        if (!src) throw std::runtime_error(path + ": missing tensor '" + name + "'");
        if (src->shape != t->shape) {
            throw std::runtime_error(path + ": shape mismatch for '" + name + "'");
        }
        t->data = src->data;
    }
    tc.class_names = ckpt.meta.at("class_names").get<std::vector<std::string>>();
    tc.val_top1 = ckpt.meta.value("val_top1", 0.0);
    const auto& nj = ckpt.meta.at("normalization");
    for (int ch = 0; ch < 3; ++ch) {
        tc.norm.mean[ch] = nj.at("mean")[static_cast<size_t>(ch)].get<real>();
        tc.norm.stdev[ch] = nj.at("std")[static_cast<size_t>(ch)].get<real>();
    }
    return tc;
}

double evaluate_top1(const TrainedClassifier& tc, const Dataset& dataset, EvalSplit split,
                     const RunConfig& cfg, const Generator* gen, std::uint64_t eval_seed) {
    if (split == EvalSplit::corrected && gen == nullptr) {
        throw std::invalid_argument("evaluate: corrected split requires a generator checkpoint");
    }
    const Normalization& norm = tc.norm;

    // Identical per-sample distortion stream for distorted and corrected.
    auto distorted_x = [&](int idx) {
        RngStream rng(eval_seed, kEvalKey, static_cast<std::uint64_t>(idx));
        return make_training_pair(dataset.items[static_cast<size_t>(idx)].image, cfg.distortion,
                                  cfg.sizes, norm, rng)
            .x;
    };

    switch (split) {
        case EvalSplit::canonical:
            return accuracy_over(dataset.val_indices, dataset, tc, cfg, [&](int idx) {
                return canonical_normalized(dataset, idx, cfg, norm);
            });
        case EvalSplit::distorted:
            return accuracy_over(dataset.val_indices, dataset, tc, cfg, [&](int idx) {
                return center_crop(distorted_x(idx), cfg.sizes.crop_canonical,
                                   cfg.sizes.crop_canonical);
            });
        case EvalSplit::corrected: {
            // Correct per batch through G, then clamp through image space the
            // way exported images are produced.
            const auto& idxs = dataset.val_indices;
            const int B = 32;
            const int n = static_cast<int>(idxs.size());
            std::int64_t correct = 0;
            for (int start = 0; start < n; start += B) {
                const int count = std::min(B, n - start);
                auto x = make_tensor(
                    {count, 3, cfg.sizes.crop_distorted, cfg.sizes.crop_distorted});
                parallel_for_each(count, [&](std::int64_t i) {
                    copy_image_into(distorted_x(idxs[static_cast<size_t>(start + i)]), *x,
                                    static_cast<int>(i));
                });
                auto y_hat = gen->forward(x);
                auto clf_in = make_tensor(
                    {count, 3, cfg.sizes.crop_canonical, cfg.sizes.crop_canonical});
                parallel_for_each(count, [&](std::int64_t i) {
                    ImageF img(3, cfg.sizes.crop_canonical, cfg.sizes.crop_canonical,
                               ImageSpace::normalized);
                    std::memcpy(img.data.data(),
                                y_hat->data.data() + static_cast<size_t>(i) * img.data.size(),
                                img.data.size() * sizeof(real));
                    denormalize(img, norm);
                    clamp01(img);
                    normalize(img, norm);
                    copy_image_into(img, *clf_in, static_cast<int>(i));
                });
                auto logits = tc.clf.forward(clf_in);
                for (int i = 0; i < count; ++i) {
                    const int label =
                        dataset.items[static_cast<size_t>(idxs[static_cast<size_t>(start + i)])]
                            .label;
                    if (argmax_row(*logits, i) == label) ++correct;
                }
            }
            return static_cast<double>(correct) / n;
        }
    }
    throw std::logic_error("evaluate: unknown split");
}

std::string report_to_csv(const std::vector<EvalRow>& rows) {
    std::string out = "model,canonical,distorted,corrected,improvement\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g\n", r.model.c_str(),
                      r.canonical, r.distorted, r.corrected, r.improvement);
        out += buf;
    }
    return out;
}

std::vector<EvalRow> report_from_csv(const std::string& csv) {
    std::vector<EvalRow> rows;
    std::istringstream in(csv);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("model,", 0) == 0) continue;
        }
        std::istringstream ls(line);
        EvalRow row;
        std::string field;
        std::getline(ls, row.model, ',');
        std::getline(ls, field, ',');
        row.canonical = std::stod(field);
        std::getline(ls, field, ',');
        row.distorted = std::stod(field);
        std::getline(ls, field, ',');
        row.corrected = std::stod(field);
        std::getline(ls, field, ',');
        row.improvement = std::stod(field);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string report_to_text(const std::vector<EvalRow>& rows) {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-20s %10s %10s %10s %12s\n", "Model", "Canonical",
                  "Distorted", "Corrected", "Improvement");
    out << buf;
    out << std::string(66, '-') << "\n";
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-20s %10.2f %10.2f %10.2f %12.2f\n", r.model.c_str(),
                      r.canonical, r.distorted, r.corrected, r.improvement);
        out << buf;
    }
    return out.str();
}

}  // namespace canonify
