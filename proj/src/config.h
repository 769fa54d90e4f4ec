#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "distortion.h"
#include "gan.h"
#include "stn.h"
#include "unet.h"

#include <json.hpp>

namespace canonify {

// Merged run configuration: dataset, distortion ranges, model sizes, training
// and evaluation settings. Loaded from an INI-style file (one [section], then
// key = value lines); command-line flags override file values via set().
struct RunConfig {
    // [dataset]
    std::string dataset_kind = "shapes";  // shapes | folder
    int dataset_count = 5000;
    std::uint64_t dataset_seed = 7;
    std::string dataset_path;

    // [distortion]
    DistortionSpec distortion;

    // [sizes]
    PairSizes sizes;

    // [model]
    int unet_depth = 3;
    int unet_base = 16;
    std::array<int, 3> loc_channels{8, 16, 32};
    int loc_hidden = 32;
    std::array<int, 3> disc_channels{16, 32, 64};

    // [train]
    int steps = 2000;
    int epochs = 0;  // used when steps == 0
    int batch_size = 16;
    real lr_g = real(2e-4);
    real lr_d = real(2e-4);
    real lambda = real(0.25);
    bool saturating = false;
    real beta1 = real(0.5);
    real beta2 = real(0.999);
    real adam_eps = real(1e-8);
    std::uint64_t seed = 1;
    int log_every = 25;

    // [classifier]
    int clf_epochs = 8;
    int clf_batch = 32;
    real clf_lr = real(1e-3);
    std::uint64_t clf_seed = 5;

    // [eval]
    std::uint64_t eval_seed = 99;

    // Applies one dotted key, e.g. set("train.steps", "500"). Unknown keys or
    // unparsable values throw std::invalid_argument.
    void set(const std::string& dotted_key, const std::string& value);
    std::string get(const std::string& dotted_key) const;

    void validate() const;

    LocConfig loc_config() const;
    UNetConfig unet_config() const;
    DiscConfig disc_config() const;
};

// Parses the INI file; unknown keys and malformed lines are rejected with the
// offending line number.
RunConfig load_config_file(const std::string& path);
RunConfig config_from_ini_text(const std::string& text, const std::string& origin = "<config>");

nlohmann::json config_to_json(const RunConfig& cfg);
RunConfig config_from_json(const nlohmann::json& j);

}  // namespace canonify
