#include "canonify.h"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "config.h"
#include "core/parallel.h"
#include "dataset.h"
#include "evaluate.h"
#include "image/png_io.h"
#include "pipeline.h"
#include "verify.h"

namespace fs = std::filesystem;
using namespace canonify;

namespace {

thread_local std::string t_last_error;

canonify_status fail(canonify_status status, const std::string& message) {
    t_last_error = message;
    return status;
}

template <typename F>
canonify_status guarded(F&& fn) {
    try {
        fn();
        t_last_error.clear();
        return CANONIFY_OK;
    } catch (const std::invalid_argument& e) {
        return fail(CANONIFY_INVALID_ARG, e.what());
    } catch (const std::logic_error& e) {
        return fail(CANONIFY_INVALID_ARG, e.what());
    } catch (const std::exception& e) {
        return fail(CANONIFY_ERROR, e.what());
    }
}

Dataset dataset_from_config(const RunConfig& cfg) {
    if (cfg.dataset_kind == "shapes") {
        return make_shapes_dataset(cfg.dataset_count, cfg.dataset_seed);
    }
    return load_folder_dataset(cfg.dataset_path, cfg.dataset_seed);
}

std::string sanitize_name(const std::string& name) {
    std::string out = name;
    for (char& c : out) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') c = '_';
    }
    return out;
}

}  // namespace

struct canonify_config {
    RunConfig cfg;
};

struct canonify_generator {
    LoadedGenerator lg;
};

extern "C" {

const char* canonify_version(void) { return "0.1.0"; }

const char* canonify_last_error(void) { return t_last_error.c_str(); }

void canonify_set_threads(int threads) { set_thread_count(threads); }

canonify_config* canonify_config_new(void) { return new canonify_config(); }

void canonify_config_free(canonify_config* cfg) { delete cfg; }

canonify_status canonify_config_load(canonify_config* cfg, const char* path) {
    if (!cfg || !path) return fail(CANONIFY_INVALID_ARG, "config_load: null argument");
    return guarded([&] {
        // replaces the configuration; callers apply flag overrides afterwards
        cfg->cfg = load_config_file(path);
    });
}

canonify_status canonify_config_set(canonify_config* cfg, const char* key, const char* value) {
    if (!cfg || !key || !value) return fail(CANONIFY_INVALID_ARG, "config_set: null argument");
    return guarded([&] { cfg->cfg.set(key, value); });
}

canonify_status canonify_config_get(const canonify_config* cfg, const char* key, char* buf,
                                    size_t buflen) {
    if (!cfg || !key || !buf || buflen == 0) {
        return fail(CANONIFY_INVALID_ARG, "config_get: null argument");
    }
    return guarded([&] {
        const std::string value = cfg->cfg.get(key);
        if (value.size() + 1 > buflen) throw std::runtime_error("config_get: buffer too small");
        std::memcpy(buf, value.c_str(), value.size() + 1);
    });
}

canonify_status canonify_dataset_generate(const canonify_config* cfg, const char* out_dir) {
    if (!cfg || !out_dir) return fail(CANONIFY_INVALID_ARG, "dataset_generate: null argument");
    return guarded([&] {
        cfg->cfg.validate();
        const Dataset ds = dataset_from_config(cfg->cfg);
        fs::create_directories(out_dir);
        std::ofstream manifest(fs::path(out_dir) / "labels.csv");
        if (!manifest) throw std::runtime_error("cannot write manifest in " + std::string(out_dir));
        manifest << "path,label\n";
        for (const auto& name : ds.class_names) {
            fs::create_directories(fs::path(out_dir) / sanitize_name(name));
        }
        for (size_t i = 0; i < ds.items.size(); ++i) {
            char file[64];
            std::snprintf(file, sizeof(file), "img_%05zu.png", i);
            const std::string rel =
                sanitize_name(ds.class_names[static_cast<size_t>(ds.items[i].label)]) + "/" +
                file;
            save_png((fs::path(out_dir) / rel).string(), ds.items[i].image);
            manifest << rel << "," << ds.items[i].label << "\n";
        }
    });
}

canonify_status canonify_distort_dir(const canonify_config* cfg, const char* in_dir,
                                     const char* out_dir, int count, uint64_t seed) {
    if (!cfg || !in_dir || !out_dir) {
        return fail(CANONIFY_INVALID_ARG, "distort_dir: null argument");
    }
    return guarded([&] {
        cfg->cfg.distortion.validate();
        if (!fs::is_directory(in_dir)) {
            throw std::invalid_argument("distort: not a directory: " + std::string(in_dir));
        }
        std::vector<std::string> files;
        for (const auto& e : fs::recursive_directory_iterator(in_dir)) {
            if (e.is_regular_file() && e.path().extension() == ".png") {
                files.push_back(e.path().string());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) throw std::runtime_error("distort: no PNGs in " + std::string(in_dir));
        if (count > 0 && static_cast<size_t>(count) < files.size()) {
            files.resize(static_cast<size_t>(count));
        }
        fs::create_directories(out_dir);

        const auto& sizes = cfg->cfg.sizes;
        nlohmann::json sidecar = nlohmann::json::array();
        for (size_t i = 0; i < files.size(); ++i) {
            const ImageU8 raw = load_png(files[i]);
            ImageF x = center_crop(resize_shorter(to_float(raw), sizes.resize_distorted),
                                   sizes.crop_distorted, sizes.crop_distorted);
            RngStream rng(seed, 0x64697374, i);
            const AffineParams affine = sample_affine(cfg->cfg.distortion, rng);
            x = apply_affine(x, affine);
            const JitterDraw jitter = sample_jitter(cfg->cfg.distortion, rng);
            x = color_jitter(x, jitter);
            real blur_sigma = 0;
            if (cfg->cfg.distortion.blur_enabled()) {
                blur_sigma = rng.uniform(cfg->cfg.distortion.blur_sigma_min,
                                         cfg->cfg.distortion.blur_sigma_max);
                x = gaussian_blur(x, blur_sigma);
            }
            char name[64];
            std::snprintf(name, sizeof(name), "distorted_%05zu.png", i);
            save_png((fs::path(out_dir) / name).string(), to_u8(x));
            sidecar.push_back({{"source", files[i]},
                               {"output", name},
                               {"rot_deg", affine.draw.rot_deg},
                               {"tx", affine.draw.tx},
                               {"ty", affine.draw.ty},
                               {"scale", affine.draw.scale},
                               {"shear_deg", affine.draw.shear_deg},
                               {"brightness", jitter.brightness},
                               {"contrast", jitter.contrast},
                               {"saturation", jitter.saturation},
                               {"hue", jitter.hue},
                               {"blur_sigma", blur_sigma}});
        }
        std::ofstream side(fs::path(out_dir) / "draws.json");
        if (!side) throw std::runtime_error("cannot write draws.json");
        side << sidecar.dump(2) << "\n";
    });
}

canonify_status canonify_train(const canonify_config* cfg, const char* resume_ckpt,
                               const char* out_ckpt, const char* metrics_csv) {
    if (!cfg || !out_ckpt) return fail(CANONIFY_INVALID_ARG, "train: null argument");
    return guarded([&] {
        RunConfig run = cfg->cfg;
        std::unique_ptr<CheckpointData> resume;
        if (resume_ckpt && *resume_ckpt) {
            resume = std::make_unique<CheckpointData>(load_checkpoint(resume_ckpt));
            // the checkpoint's config governs everything except the target
            // step count, so a resumed run replays the original trajectory
            RunConfig from_ckpt = config_from_json(resume->meta.at("config"));
            from_ckpt.steps = run.steps;
            from_ckpt.epochs = run.epochs;
            run = from_ckpt;
        }
        run.validate();
        const Dataset ds = dataset_from_config(run);
        std::unique_ptr<Trainer> trainer;
        if (resume) {
            trainer = std::make_unique<Trainer>(run, ds, *resume);
        } else {
            trainer = std::make_unique<Trainer>(run, ds);
        }
        trainer->run();
        save_checkpoint(out_ckpt, trainer->make_checkpoint());
        if (metrics_csv && *metrics_csv) {
            std::ofstream m(metrics_csv, std::ios::trunc);
            if (!m) throw std::runtime_error("cannot write metrics file " +
                                             std::string(metrics_csv));
            m << metrics_to_csv(trainer->metrics());
        }
    });
}

canonify_status canonify_train_classifier(const canonify_config* cfg, const char* out_ckpt) {
    if (!cfg || !out_ckpt) return fail(CANONIFY_INVALID_ARG, "train_classifier: null argument");
    return guarded([&] {
        cfg->cfg.validate();
        const Dataset ds = dataset_from_config(cfg->cfg);
        const TrainedClassifier tc = train_classifier(ds, cfg->cfg);
        save_classifier(out_ckpt, tc, cfg->cfg);
    });
}

canonify_status canonify_generator_open(const char* ckpt_path, canonify_generator** out) {
    if (!ckpt_path || !out) return fail(CANONIFY_INVALID_ARG, "generator_open: null argument");
    *out = nullptr;
    return guarded([&] {
        auto* gen = new canonify_generator{load_generator(ckpt_path)};
        *out = gen;
    });
}

void canonify_generator_close(canonify_generator* gen) { delete gen; }

canonify_status canonify_generator_correct(canonify_generator* gen, const char* in_png,
                                           const char* out_png, const char* triptych_png) {
    if (!gen || !in_png || !out_png) {
        return fail(CANONIFY_INVALID_ARG, "generator_correct: null argument");
    }
    return guarded([&] {
        correct_image_file(gen->lg, in_png, out_png, triptych_png ? triptych_png : "");
    });
}

canonify_status canonify_eval(const canonify_config* cfg, const char* classifier_ckpt,
                              const char* generator_ckpt, const char* report_csv, char* summary,
                              size_t summary_len) {
    if (!cfg || !classifier_ckpt) return fail(CANONIFY_INVALID_ARG, "eval: null argument");
    return guarded([&] {
        cfg->cfg.validate();
        const Dataset ds = dataset_from_config(cfg->cfg);
        const TrainedClassifier tc = load_classifier(classifier_ckpt);

        EvalRow row;
        row.model = "desk_cnn";
        row.canonical = evaluate_top1(tc, ds, EvalSplit::canonical, cfg->cfg, nullptr,
                                      cfg->cfg.eval_seed) * 100.0;
        row.distorted = evaluate_top1(tc, ds, EvalSplit::distorted, cfg->cfg, nullptr,
                                      cfg->cfg.eval_seed) * 100.0;
        if (generator_ckpt && *generator_ckpt) {
            LoadedGenerator lg = load_generator(generator_ckpt);
            row.corrected = evaluate_top1(tc, ds, EvalSplit::corrected, cfg->cfg, &lg.gen,
                                          cfg->cfg.eval_seed) * 100.0;
            row.improvement = row.corrected - row.distorted;
        } else {
            row.corrected = -1;
            row.improvement = 0;
        }
        const std::vector<EvalRow> rows{row};
        if (report_csv && *report_csv) {
            std::ofstream out(report_csv, std::ios::trunc);
            if (!out) throw std::runtime_error("cannot write report " + std::string(report_csv));
            out << report_to_csv(rows);
        }
        if (summary && summary_len > 0) {
            const std::string text = report_to_text(rows);
            const size_t n = std::min(summary_len - 1, text.size());
            std::memcpy(summary, text.data(), n);
            summary[n] = '\0';
        }
    });
}

canonify_status canonify_verify(const char* filter, canonify_line_fn line_cb, void* user,
                                int* failures) {
    return guarded([&] {
        const auto props = run_verify(filter ? filter : "");
        if (props.empty()) {
            throw std::invalid_argument("verify: no properties match filter '" +
                                        std::string(filter ? filter : "") + "'");
        }
        int failed = 0;
        for (const auto& p : props) {
            const std::string line =
                std::string(p.pass ? "[PASS] " : "[FAIL] ") + p.name + ": " + p.detail;
            if (line_cb) {
                line_cb(line.c_str(), user);
            } else {
                std::fputs((line + "\n").c_str(), stdout);
            }
            failed += p.pass ? 0 : 1;
        }
        if (failures) *failures = failed;
    });
}

canonify_status canonify_verify_names(canonify_line_fn line_cb, void* user) {
    if (!line_cb) return fail(CANONIFY_INVALID_ARG, "verify_names: null callback");
    return guarded([&] {
        for (const auto& name : verify_property_names()) line_cb(name.c_str(), user);
    });
}

}  // extern "C"
