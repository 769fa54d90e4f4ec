// Acceptance suite: runs every acceptance criterion end to end and prints one
// pass/fail line per criterion. Exits nonzero if any criterion fails.
//
// Criteria 1 and 4 drive the shipped binaries; the rest run in process at
// full desk scale (5000-image shapes dataset, 64x64 pipeline).
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "config.h"
#include "core/kernels.h"
#include "dataset.h"
#include "evaluate.h"
#include "image/png_io.h"
#include "verify.h"

using namespace canonify;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int run_command(const std::string& cmd) {
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

bool files_equal(const std::string& a, const std::string& b) {
    return fs::exists(a) && fs::exists(b) && read_file(a) == read_file(b);
}

std::string q(const std::string& s) { return "'" + s + "'"; }

// ---- criterion 1: gradient correctness through the shipped surfaces -------

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    const int rc32 = run_command(std::string(CANONIFY_CLI_PATH) + " verify > /dev/null");
    const int rc64 = run_command(std::string(CANONIFY_VERIFY64_PATH) + " > /dev/null");
    const double elapsed = seconds_since(t0);
    char buf[256];
    std::snprintf(buf, sizeof(buf),
                  "gradient checks: canonify verify (f32) %s, verify64 (f64) %s, %.0fs "
                  "(budget 120s)",
                  rc32 == 0 ? "pass" : "FAIL", rc64 == 0 ? "pass" : "FAIL", elapsed);
    report(1, rc32 == 0 && rc64 == 0 && elapsed < 120.0, buf);
}

// ---- criterion 2: sampler exactness ---------------------------------------

void criterion_2() {
    bool identity_ok = true;
    RngStream rng(2024);
    for (int size : {8, 64, 72}) {
        auto x = make_tensor({2, 3, size, size});
        for (auto& v : x->data) v = rng.uniform(0, 1);
        auto theta = make_tensor({2, 2, 3});
        theta->data = {1, 0, 0, 0, 1, 0, 1, 0, 0, 0, 1, 0};
        auto y = grid_sample(x, affine_grid(theta, size, size));
        identity_ok = identity_ok && y->data == x->data;
    }

    RunConfig cfg;
    Generator identity = Generator::create_identity(cfg);
    auto x = make_tensor({2, 3, 72, 72});
    for (auto& v : x->data) v = rng.uniform(0, 1);
    auto y = identity.forward(x);
    auto crop = center_crop_nchw(x, 64, 64);
    const bool crop_ok = y->data == crop->data;

    report(2, identity_ok && crop_ok,
           std::string("sampler exactness: identity STN bitwise ") +
               (identity_ok ? "equal" : "UNEQUAL") + ", zero-weight generator center crop " +
               (crop_ok ? "bitwise equal" : "UNEQUAL"));
}

// ---- criterion 3: oracle equivalence ---------------------------------------

void criterion_3() {
    bool all = true;
    std::string detail = "oracles:";
    for (const char* name :
         {"oracle.conv_naive", "oracle.channel_std_two_pass", "color.hsv_roundtrip_lattice"}) {
        const auto props = run_verify(name);
        const bool ok = props.size() == 1 && props[0].pass;
        all = all && ok;
        detail += std::string(" ") + name + (ok ? " pass" : " FAIL");
    }
    report(3, all, detail);
}

// ---- criterion 4: determinism through the CLI ------------------------------

void write_determinism_config(const std::string& path, int steps) {
    std::ofstream out(path);
    out << "[dataset]\nkind = shapes\ncount = 160\nseed = 11\n"
        << "[train]\nbatch_size = 8\nsteps = " << steps << "\nseed = 4\nlog_every = 5\n";
}

void criterion_4() {
    const fs::path dir = fs::temp_directory_path() / "canonify_acceptance_det";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cli = CANONIFY_CLI_PATH;
    const std::string cfg20 = (dir / "run20.ini").string();
    const std::string cfg10 = (dir / "run10.ini").string();
    write_determinism_config(cfg20, 20);
    write_determinism_config(cfg10, 10);

    auto train = [&](const std::string& config, const std::string& out,
                     const std::string& resume) {
        std::string cmd = cli + " train --config " + q(config) + " --out " + q(out) +
                          " --metrics " + q(out + ".csv");
        if (!resume.empty()) cmd += " --resume " + q(resume) + " --steps 20";
        return run_command(cmd + " > /dev/null");
    };

    const std::string a = (dir / "a.ckpt").string();
    const std::string b = (dir / "b.ckpt").string();
    const std::string half = (dir / "half.ckpt").string();
    const std::string resumed = (dir / "resumed.ckpt").string();
    bool ok = train(cfg20, a, "") == 0;
    ok = ok && train(cfg20, b, "") == 0;
    const bool twin_ckpt = ok && files_equal(a, b);
    const bool twin_metrics = ok && files_equal(a + ".csv", b + ".csv");
    ok = ok && train(cfg10, half, "") == 0;
    ok = ok && train(cfg10, resumed, half) == 0;
    const bool resume_ok = ok && files_equal(a, resumed);

    report(4, twin_ckpt && twin_metrics && resume_ok,
           std::string("determinism: twin checkpoints ") +
               (twin_ckpt ? "bitwise equal" : "DIFFER") + ", twin metrics " +
               (twin_metrics ? "bitwise equal" : "DIFFER") + ", save/resume " +
               (resume_ok ? "bitwise equal" : "DIFFER"));
    fs::remove_all(dir);
}

// ---- criteria 5-7: the Table 1 analog at desk scale ------------------------

struct DeskEval {
    double canonical = 0, distorted = 0;
    Dataset dataset;
    TrainedClassifier classifier;
    RunConfig cfg;
};

double recovery_percent(const DeskEval& desk, double corrected) {
    return (corrected - desk.distorted) / (desk.canonical - desk.distorted) * 100.0;
}

double train_and_eval_recovery(DeskEval& desk, real lambda, double* corrected_out) {
    RunConfig cfg = desk.cfg;
    cfg.lambda = lambda;
    Trainer trainer(cfg, desk.dataset);
    trainer.run();
    const double corrected = evaluate_top1(desk.classifier, desk.dataset, EvalSplit::corrected,
                                           cfg, &trainer.generator(), cfg.eval_seed) *
                             100.0;
    if (corrected_out) *corrected_out = corrected;
    return recovery_percent(desk, corrected);
}

void criteria_5_to_7() {
    const auto t0 = std::chrono::steady_clock::now();
    DeskEval desk;
    desk.cfg = RunConfig{};  // desk defaults: 5000 images, 64x64, lambda 0.25
    desk.dataset = make_shapes_dataset(desk.cfg.dataset_count, desk.cfg.dataset_seed);
    desk.classifier = train_classifier(desk.dataset, desk.cfg);
    desk.canonical = evaluate_top1(desk.classifier, desk.dataset, EvalSplit::canonical, desk.cfg,
                                   nullptr, desk.cfg.eval_seed) *
                     100.0;
    desk.distorted = evaluate_top1(desk.classifier, desk.dataset, EvalSplit::distorted, desk.cfg,
                                   nullptr, desk.cfg.eval_seed) *
                     100.0;
    const double drop = desk.canonical - desk.distorted;

    // criterion 7 first: it needs no training
    {
        Generator identity = Generator::create_identity(desk.cfg);
        const double corrected_id = evaluate_top1(desk.classifier, desk.dataset,
                                                  EvalSplit::corrected, desk.cfg, &identity,
                                                  desk.cfg.eval_seed) *
                                    100.0;
        char buf[256];
        std::snprintf(buf, sizeof(buf),
                      "paired evaluation: untrained generator corrected %.2f%% vs distorted "
                      "%.2f%% (|diff| %.2f <= 0.5 points)",
                      corrected_id, desk.distorted, std::abs(corrected_id - desk.distorted));
        report(7, std::abs(corrected_id - desk.distorted) <= 0.5, buf);
    }

    double corrected_gan = 0;
    const double recovery_gan = train_and_eval_recovery(desk, desk.cfg.lambda, &corrected_gan);
    const double elapsed5 = seconds_since(t0);
    {
        char buf[512];
        std::snprintf(buf, sizeof(buf),
                      "desk Table-1 analog: classifier %.2f%% canonical (>= 90), distortion "
                      "cost %.2f points (>= 8), corrected %.2f%% -> recovery %.1f%% of the gap "
                      "(>= 25) after %d steps (<= 5000), %.0fs elapsed (< 3600)",
                      desk.canonical, drop, corrected_gan, recovery_gan, desk.cfg.steps,
                      elapsed5);
        report(5,
               desk.canonical >= 90.0 && drop >= 8.0 && recovery_gan >= 25.0 &&
                   desk.cfg.steps <= 5000 && elapsed5 < 3600.0,
               buf);
    }

    double corrected_mse = 0;
    const double recovery_mse = train_and_eval_recovery(desk, 0, &corrected_mse);
    {
        char buf[512];
        std::snprintf(buf, sizeof(buf),
                      "ablation ordering: lambda=0 recovery %.1f%% (>= 25), lambda=%.2f "
                      "recovery %.1f%% (>= %.1f - 10)",
                      recovery_mse, static_cast<double>(desk.cfg.lambda), recovery_gan,
                      recovery_mse);
        report(6, recovery_mse >= 25.0 && recovery_gan >= recovery_mse - 10.0, buf);
    }

    std::printf("       total desk-scale runtime: %.0fs\n", seconds_since(t0));
}

}  // namespace

int main() {
    std::printf("canonify acceptance suite\n");
    const auto t0 = std::chrono::steady_clock::now();
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criteria_5_to_7();
    std::printf("%d criteria failed (total %.0fs)\n", g_failures, seconds_since(t0));
    return g_failures == 0 ? 0 : 1;
}
