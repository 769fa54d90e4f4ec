#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "checkpoint.h"
#include "config.h"
#include "core/adam.h"
#include "dataset.h"
#include "gan.h"
#include "stn.h"
#include "unet.h"

namespace canonify {

// G = residual color correction after the spatial transformer. The generator
// never sees the canonical target as an input; it meets y only in the loss.
struct Generator {
    Stn stn;
    UNet unet;

    static Generator create(const RunConfig& cfg, RngStream& rng);
    // Identity STN and all-zero U-Net: acts as a pure center crop.
    static Generator create_identity(const RunConfig& cfg);
    TensorPtr forward(const TensorPtr& x) const { return unet.correct(stn.forward(x)); }
    void params(const std::string& prefix, NamedTensors& out) const {
        stn.params(prefix + ".stn", out);
        unet.params(prefix + ".unet", out);
    }
};

struct MetricsRow {
    std::int64_t step = 0;
    double mse = 0, g_adv = 0, d_loss = 0, d_acc = 0;
};

std::string metrics_to_csv(const std::vector<MetricsRow>& rows);

// Raised when a loss goes non-finite; names the batch's RNG key so the exact
// batch can be regenerated.
class TrainAbortError : public std::runtime_error {
public:
    TrainAbortError(std::uint64_t seed, std::int64_t epoch, std::int64_t batch);
    std::uint64_t seed;
    std::int64_t epoch, batch;
};

// Normalization constants over the training split's canonical images
// (population statistics per channel, computed in raw01 space).
Normalization compute_normalization(const Dataset& dataset, const PairSizes& sizes);

// Canonical preprocessing: resize shorter axis, center crop (raw01 space).
ImageF canonical_image(const ImageU8& raw, const PairSizes& sizes);

class Trainer {
public:
    Trainer(const RunConfig& cfg, const Dataset& dataset);
    Trainer(const RunConfig& cfg, const Dataset& dataset, const CheckpointData& resume);

    struct Batch {
        TensorPtr y, x;
        std::int64_t epoch = 0, batch_idx = 0;
    };
    Batch make_batch(std::int64_t step) const;

    void step();  // one full adversarial step (D half then G half)
    void run();   // steps until total_steps()

    std::int64_t total_steps() const;
    std::int64_t steps_per_epoch() const;
    std::int64_t current_step() const { return step_; }
    const std::vector<MetricsRow>& metrics() const { return metrics_; }
    const Normalization& normalization() const { return norm_; }
    const RunConfig& config() const { return cfg_; }
    Generator& generator() { return gen_; }
    Discriminator& discriminator() { return disc_; }

    CheckpointData make_checkpoint() const;

private:
    void init_models();
    void restore(const CheckpointData& ckpt);

    RunConfig cfg_;
    const Dataset* data_;
    Normalization norm_;
    Generator gen_;
    Discriminator disc_;
    NamedTensors gen_named_, disc_named_;
    std::unique_ptr<Adam> adam_g_, adam_d_;
    std::int64_t step_ = 0;
    std::vector<MetricsRow> metrics_;
};

// Loads a generator checkpoint for inference.
struct LoadedGenerator {
    RunConfig cfg;
    Generator gen;
    Normalization norm;
};
LoadedGenerator load_generator(const std::string& path);

struct CorrectResult {
    ImageU8 corrected;
    ImageU8 triptych;  // input | x_s | y_hat panels
};
CorrectResult correct_image_data(const Generator& gen, const RunConfig& cfg,
                                 const Normalization& norm, const ImageU8& input);

// End-to-end file variant: decode, correct, write PNG(s).
void correct_image_file(const LoadedGenerator& lg, const std::string& in_path,
                        const std::string& out_path, const std::string& triptych_path);

}  // namespace canonify
