#include <doctest.h>

#include <canonify.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const char* sub) const { return (path / sub).string(); }
};

struct Cfg {
    canonify_config* c = canonify_config_new();
    ~Cfg() { canonify_config_free(c); }
    void set(const char* k, const char* v) { REQUIRE(canonify_config_set(c, k, v) == CANONIFY_OK); }
};

// Mini run configuration shared by the C API tests.
void mini(Cfg& cfg) {
    cfg.set("dataset.count", "48");
    cfg.set("dataset.seed", "3");
    cfg.set("sizes.resize_canonical", "24");
    cfg.set("sizes.crop_canonical", "16");
    cfg.set("sizes.resize_distorted", "24");
    cfg.set("sizes.crop_distorted", "24");
    cfg.set("model.loc_channels", "4,8,8");
    cfg.set("model.loc_hidden", "16");
    cfg.set("model.unet_depth", "2");
    cfg.set("model.unet_base", "8");
    cfg.set("model.disc_channels", "8,8,16");
    cfg.set("train.batch_size", "4");
    cfg.set("train.steps", "4");
}

}  // namespace

TEST_CASE("capi version and error reporting") {
    CHECK(std::string(canonify_version()) == "0.1.0");

    Cfg cfg;
    CHECK(canonify_config_set(cfg.c, "train.bogus", "1") == CANONIFY_INVALID_ARG);
    CHECK(std::string(canonify_last_error()).find("train.bogus") != std::string::npos);

    CHECK(canonify_config_set(cfg.c, "train.steps", "not-a-number") == CANONIFY_INVALID_ARG);
    CHECK(canonify_config_load(cfg.c, "/nonexistent/path.ini") == CANONIFY_ERROR);
    CHECK(canonify_config_set(nullptr, "a", "b") == CANONIFY_INVALID_ARG);
}

TEST_CASE("capi config get/set round trip") {
    Cfg cfg;
    cfg.set("train.lambda", "0.125");
    char buf[64];
    REQUIRE(canonify_config_get(cfg.c, "train.lambda", buf, sizeof(buf)) == CANONIFY_OK);
    CHECK(std::string(buf) == "0.125");
    CHECK(canonify_config_get(cfg.c, "train.lambda", buf, 2) == CANONIFY_ERROR);
}

TEST_CASE("capi config file loading") {
    TempDir dir("canonify_capi_cfg");
    const std::string ini_path = dir / "run.ini";
    std::ofstream(ini_path) << "[train]\nsteps = 11\n";
    Cfg cfg;
    REQUIRE(canonify_config_load(cfg.c, ini_path.c_str()) == CANONIFY_OK);
    char buf[16];
    REQUIRE(canonify_config_get(cfg.c, "train.steps", buf, sizeof(buf)) == CANONIFY_OK);
    CHECK(std::string(buf) == "11");

    std::ofstream(ini_path) << "[train]\nsteps = 11\nnope = 2\n";
    CHECK(canonify_config_load(cfg.c, ini_path.c_str()) == CANONIFY_INVALID_ARG);
    CHECK(std::string(canonify_last_error()).find(":3") != std::string::npos);
}

TEST_CASE("capi dataset generation and distortion") {
    TempDir dir("canonify_capi_ds");
    Cfg cfg;
    mini(cfg);
    cfg.set("dataset.count", "16");
    const std::string out = dir / "data";
    REQUIRE(canonify_dataset_generate(cfg.c, out.c_str()) == CANONIFY_OK);
    CHECK(fs::exists(fs::path(out) / "labels.csv"));
    int pngs = 0;
    for (const auto& e : fs::recursive_directory_iterator(out)) {
        pngs += e.path().extension() == ".png" ? 1 : 0;
    }
    CHECK(pngs == 16);

    const std::string dist = dir / "distorted";
    REQUIRE(canonify_distort_dir(cfg.c, out.c_str(), dist.c_str(), 5, 7) == CANONIFY_OK);
    CHECK(fs::exists(fs::path(dist) / "draws.json"));
    int distorted = 0;
    for (const auto& e : fs::directory_iterator(dist)) {
        distorted += e.path().extension() == ".png" ? 1 : 0;
    }
    CHECK(distorted == 5);

    CHECK(canonify_distort_dir(cfg.c, (dir / "missing").c_str(), dist.c_str(), 1, 7) ==
          CANONIFY_INVALID_ARG);
}

TEST_CASE("capi train, correct and verify filter") {
    TempDir dir("canonify_capi_train");
    Cfg cfg;
    mini(cfg);
    const std::string ckpt = dir / "gen.ckpt";
    const std::string metrics = dir / "metrics.csv";
    REQUIRE(canonify_train(cfg.c, nullptr, ckpt.c_str(), metrics.c_str()) == CANONIFY_OK);
    CHECK(fs::exists(ckpt));
    CHECK(fs::exists(metrics));

    canonify_generator* gen = nullptr;
    REQUIRE(canonify_generator_open(ckpt.c_str(), &gen) == CANONIFY_OK);
    REQUIRE(gen != nullptr);

    // correct one image from a tiny generated dataset
    const std::string data = dir / "data";
    REQUIRE(canonify_dataset_generate(cfg.c, data.c_str()) == CANONIFY_OK);
    std::string input;
    for (const auto& e : fs::recursive_directory_iterator(data)) {
        if (e.path().extension() == ".png") {
            input = e.path().string();
            break;
        }
    }
    REQUIRE(!input.empty());
    const std::string corrected = dir / "corrected.png";
    const std::string trip = dir / "trip.png";
    REQUIRE(canonify_generator_correct(gen, input.c_str(), corrected.c_str(), trip.c_str()) ==
            CANONIFY_OK);
    CHECK(fs::exists(corrected));
    CHECK(fs::exists(trip));
    CHECK(canonify_generator_correct(gen, (dir / "missing.png").c_str(), corrected.c_str(),
                                     nullptr) == CANONIFY_ERROR);
    canonify_generator_close(gen);

    canonify_generator* bad = nullptr;
    CHECK(canonify_generator_open((dir / "missing.ckpt").c_str(), &bad) == CANONIFY_ERROR);
    CHECK(bad == nullptr);

    // verify with a filter, collecting lines
    std::vector<std::string> lines;
    int failures = -1;
    auto collect = [](const char* line, void* user) {
        static_cast<std::vector<std::string>*>(user)->emplace_back(line);
    };
    REQUIRE(canonify_verify("hsv", collect, &lines, &failures) == CANONIFY_OK);
    CHECK(failures == 0);
    REQUIRE(lines.size() == 1);
    CHECK(lines[0].find("color.hsv_roundtrip_lattice") != std::string::npos);

    CHECK(canonify_verify("no-such-property", collect, &lines, &failures) ==
          CANONIFY_INVALID_ARG);
}

TEST_CASE("capi verify names listing") {
    std::vector<std::string> names;
    auto collect = [](const char* line, void* user) {
        static_cast<std::vector<std::string>*>(user)->emplace_back(line);
    };
    REQUIRE(canonify_verify_names(collect, &names) == CANONIFY_OK);
    CHECK(names.size() >= 20);
    bool has_sampler = false;
    for (const auto& n : names) has_sampler = has_sampler || n == "sampler.identity_exact";
    CHECK(has_sampler);
}
