// canonify command-line tool. Thin wrapper over the C API: every subcommand
// parses flags, fills a canonify_config and calls one library entry point.
#include <canonify.h>

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct ConfigHandle {
    canonify_config* cfg = canonify_config_new();
    ~ConfigHandle() { canonify_config_free(cfg); }
};

int report(canonify_status status) {
    if (status == CANONIFY_OK) return kExitOk;
    std::fprintf(stderr, "error: %s\n", canonify_last_error());
    return status == CANONIFY_INVALID_ARG ? kExitUsage : kExitRuntime;
}

bool apply(canonify_config* cfg, const std::string& key, const std::string& value, int& rc) {
    const canonify_status status = canonify_config_set(cfg, key.c_str(), value.c_str());
    if (status != CANONIFY_OK) {
        rc = report(status);
        return false;
    }
    return true;
}

// --dataset accepts a folder path or "shapes:<count>:<seed>".
bool apply_dataset_arg(canonify_config* cfg, const std::string& spec, int& rc) {
    if (spec.rfind("shapes:", 0) == 0 || spec == "shapes") {
        if (!apply(cfg, "dataset.kind", "shapes", rc)) return false;
        std::string rest = spec == "shapes" ? "" : spec.substr(7);
        const auto colon = rest.find(':');
        const std::string count = rest.substr(0, colon);
        if (!count.empty() && !apply(cfg, "dataset.count", count, rc)) return false;
        if (colon != std::string::npos &&
            !apply(cfg, "dataset.seed", rest.substr(colon + 1), rc)) {
            return false;
        }
        return true;
    }
    return apply(cfg, "dataset.kind", "folder", rc) && apply(cfg, "dataset.path", spec, rc);
}

void print_line(const char* line, void*) { std::printf("%s\n", line); }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"canonify - learned correction of distorted images back to their canonical form"};
    app.name("canonify");
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = hardware default)");

    ConfigHandle handle;
    canonify_config* cfg = handle.cfg;
    std::string config_path;

    // dataset
    auto* cmd_dataset = app.add_subcommand("dataset", "Generate a labeled image dataset");
    std::string ds_kind = "shapes", ds_out;
    int ds_count = 5000;
    std::uint64_t ds_seed = 7;
    bool ds_count_set = false, ds_seed_set = false;
    cmd_dataset->add_option("--kind", ds_kind, "Dataset kind: shapes")->capture_default_str();
    cmd_dataset->add_option("--n", ds_count, "Number of images")->capture_default_str();
    cmd_dataset->add_option("--seed", ds_seed, "Dataset seed")->capture_default_str();
    cmd_dataset->add_option("--out", ds_out, "Output directory")->required();
    cmd_dataset->add_option("--config", config_path, "Run configuration file");
    cmd_dataset->callback([&] { ds_count_set = ds_seed_set = true; });

    // distort
    auto* cmd_distort = app.add_subcommand("distort", "Write distorted copies of input images");
    std::string di_in, di_out, di_spec;
    int di_count = 0;
    std::uint64_t di_seed = 0;
    cmd_distort->add_option("--in-dir", di_in, "Directory of source PNGs")->required();
    cmd_distort->add_option("--out-dir", di_out, "Output directory")->required();
    cmd_distort->add_option("--seed", di_seed, "Draw seed")->capture_default_str();
    cmd_distort->add_option("--spec", di_spec, "Configuration file with [distortion] ranges");
    cmd_distort->add_option("--count", di_count, "Maximum number of images (0 = all)")
        ->capture_default_str();

    // train
    auto* cmd_train = app.add_subcommand("train", "Train the correction generator");
    std::string tr_out, tr_metrics, tr_resume;
    std::string tr_steps, tr_seed, tr_lambda, tr_batch, tr_lr_g, tr_lr_d, tr_dataset;
    cmd_train->add_option("--config", config_path, "Run configuration file");
    cmd_train->add_option("--out", tr_out, "Output checkpoint path")->required();
    cmd_train->add_option("--metrics", tr_metrics, "Metrics CSV path (default <out>.metrics.csv)");
    cmd_train->add_option("--resume", tr_resume, "Resume from an earlier checkpoint");
    cmd_train->add_option("--steps", tr_steps, "Override train.steps");
    cmd_train->add_option("--seed", tr_seed, "Override train.seed");
    cmd_train->add_option("--lambda", tr_lambda, "Override train.lambda");
    cmd_train->add_option("--batch", tr_batch, "Override train.batch_size");
    cmd_train->add_option("--lr-g", tr_lr_g, "Override train.lr_g");
    cmd_train->add_option("--lr-d", tr_lr_d, "Override train.lr_d");
    cmd_train->add_option("--dataset", tr_dataset, "Dataset: folder path or shapes:<n>:<seed>");

    // classifier
    auto* cmd_classifier =
        app.add_subcommand("classifier", "Train the evaluation classifier on canonical images");
    std::string cl_out, cl_dataset;
    cmd_classifier->add_option("--config", config_path, "Run configuration file");
    cmd_classifier->add_option("--out", cl_out, "Output checkpoint path")->required();
    cmd_classifier->add_option("--dataset", cl_dataset,
                               "Dataset: folder path or shapes:<n>:<seed>");

    // correct
    auto* cmd_correct = app.add_subcommand("correct", "Correct a single image");
    std::string co_ckpt, co_in, co_out, co_trip;
    cmd_correct->add_option("--ckpt", co_ckpt, "Generator checkpoint")->required();
    cmd_correct->add_option("--in", co_in, "Input PNG")->required();
    cmd_correct->add_option("--out", co_out, "Corrected output PNG")->required();
    cmd_correct->add_option("--triptych", co_trip,
                            "Also write an input | intermediate | corrected strip");

    // eval
    auto* cmd_eval = app.add_subcommand("eval", "Evaluate canonical / distorted / corrected top-1");
    std::string ev_classifier, ev_generator, ev_out, ev_dataset, ev_seed;
    cmd_eval->add_option("--config", config_path, "Run configuration file");
    cmd_eval->add_option("--classifier", ev_classifier, "Classifier checkpoint")->required();
    cmd_eval->add_option("--generator", ev_generator, "Generator checkpoint (optional)");
    cmd_eval->add_option("--dataset", ev_dataset, "Dataset: folder path or shapes:<n>:<seed>");
    cmd_eval->add_option("--seed", ev_seed, "Override eval.seed");
    cmd_eval->add_option("--out", ev_out, "Report CSV path");

    // verify
    auto* cmd_verify = app.add_subcommand("verify", "Run the self-verification battery");
    std::string vf_filter;
    bool vf_list = false;
    cmd_verify->add_option("--filter", vf_filter, "Run only properties containing this substring");
    cmd_verify->add_flag("--list", vf_list, "List property names without running them");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    canonify_set_threads(threads);
    int rc = kExitOk;
    if (!config_path.empty()) {
        const canonify_status status = canonify_config_load(cfg, config_path.c_str());
        if (status != CANONIFY_OK) return report(status);
    }

    if (cmd_dataset->parsed()) {
        if (!apply(cfg, "dataset.kind", ds_kind, rc)) return rc;
        if (!apply(cfg, "dataset.count", std::to_string(ds_count), rc)) return rc;
        if (!apply(cfg, "dataset.seed", std::to_string(ds_seed), rc)) return rc;
        return report(canonify_dataset_generate(cfg, ds_out.c_str()));
    }

    if (cmd_distort->parsed()) {
        if (!di_spec.empty()) {
            const canonify_status status = canonify_config_load(cfg, di_spec.c_str());
            if (status != CANONIFY_OK) return report(status);
        }
        return report(canonify_distort_dir(cfg, di_in.c_str(), di_out.c_str(), di_count,
                                           di_seed));
    }

    if (cmd_train->parsed()) {
        if (!tr_dataset.empty() && !apply_dataset_arg(cfg, tr_dataset, rc)) return rc;
        if (!tr_steps.empty() && !apply(cfg, "train.steps", tr_steps, rc)) return rc;
        if (!tr_seed.empty() && !apply(cfg, "train.seed", tr_seed, rc)) return rc;
        if (!tr_lambda.empty() && !apply(cfg, "train.lambda", tr_lambda, rc)) return rc;
        if (!tr_batch.empty() && !apply(cfg, "train.batch_size", tr_batch, rc)) return rc;
        if (!tr_lr_g.empty() && !apply(cfg, "train.lr_g", tr_lr_g, rc)) return rc;
        if (!tr_lr_d.empty() && !apply(cfg, "train.lr_d", tr_lr_d, rc)) return rc;
        const std::string metrics = tr_metrics.empty() ? tr_out + ".metrics.csv" : tr_metrics;
        return report(canonify_train(cfg, tr_resume.empty() ? nullptr : tr_resume.c_str(),
                                     tr_out.c_str(), metrics.c_str()));
    }

    if (cmd_classifier->parsed()) {
        if (!cl_dataset.empty() && !apply_dataset_arg(cfg, cl_dataset, rc)) return rc;
        return report(canonify_train_classifier(cfg, cl_out.c_str()));
    }

    if (cmd_correct->parsed()) {
        canonify_generator* gen = nullptr;
        canonify_status status = canonify_generator_open(co_ckpt.c_str(), &gen);
        if (status != CANONIFY_OK) return report(status);
        status = canonify_generator_correct(gen, co_in.c_str(), co_out.c_str(),
                                            co_trip.empty() ? nullptr : co_trip.c_str());
        canonify_generator_close(gen);
        return report(status);
    }

    if (cmd_eval->parsed()) {
        if (!ev_dataset.empty() && !apply_dataset_arg(cfg, ev_dataset, rc)) return rc;
        if (!ev_seed.empty() && !apply(cfg, "eval.seed", ev_seed, rc)) return rc;
        std::vector<char> summary(4096);
        const canonify_status status =
            canonify_eval(cfg, ev_classifier.c_str(),
                          ev_generator.empty() ? nullptr : ev_generator.c_str(),
                          ev_out.empty() ? nullptr : ev_out.c_str(), summary.data(),
                          summary.size());
        if (status == CANONIFY_OK) std::printf("%s", summary.data());
        return report(status);
    }

    if (cmd_verify->parsed()) {
        if (vf_list) {
            return report(canonify_verify_names(print_line, nullptr));
        }
        int failures = 0;
        const canonify_status status =
            canonify_verify(vf_filter.c_str(), print_line, nullptr, &failures);
        if (status != CANONIFY_OK) return report(status);
        std::printf("%d properties failed\n", failures);
        return failures == 0 ? kExitOk : kExitRuntime;
    }

    return kExitUsage;
}
