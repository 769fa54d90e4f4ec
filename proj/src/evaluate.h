#pragma once

#include <string>
#include <vector>

#include "classifier.h"
#include "config.h"
#include "dataset.h"
#include "pipeline.h"

namespace canonify {

// Trains the desk classifier on the training split's canonical images with
// cross-entropy. Aborts below 70% validation top-1 (dataset or config defect).
struct TrainedClassifier {
    Classifier clf;
    Normalization norm;
    double val_top1 = 0;
    std::vector<std::string> class_names;
};
TrainedClassifier train_classifier(const Dataset& dataset, const RunConfig& cfg);

void save_classifier(const std::string& path, const TrainedClassifier& tc, const RunConfig& cfg);
TrainedClassifier load_classifier(const std::string& path);

enum class EvalSplit { canonical, distorted, corrected };

// Top-1 accuracy over the validation split. The distorted and corrected
// variants draw identical per-sample distortions (keyed by eval seed and the
// sample's dataset index), so their difference isolates the corrector.
double evaluate_top1(const TrainedClassifier& tc, const Dataset& dataset, EvalSplit split,
                     const RunConfig& cfg, const Generator* gen, std::uint64_t eval_seed);

struct EvalRow {
    std::string model;
    double canonical = 0, distorted = 0, corrected = 0;
    double improvement = 0;  // corrected - distorted, exactly as reported
};

std::string report_to_csv(const std::vector<EvalRow>& rows);
std::vector<EvalRow> report_from_csv(const std::string& csv);
std::string report_to_text(const std::vector<EvalRow>& rows);

}  // namespace canonify
