#include <doctest.h>

#include <cmath>

#include "dataset.h"
#include "evaluate.h"

using namespace canonify;

namespace {

RunConfig tiny_eval_config() {
    RunConfig cfg;
    cfg.dataset_count = 96;
    cfg.dataset_seed = 21;
    cfg.sizes = PairSizes{72, 48, 72, 48};
    cfg.loc_channels = {4, 8, 8};
    cfg.loc_hidden = 16;
    cfg.unet_depth = 2;
    cfg.unet_base = 8;
    cfg.clf_epochs = 2;
    cfg.clf_batch = 16;
    return cfg;
}

}  // namespace

TEST_CASE("report csv round trips exactly") {
    std::vector<EvalRow> rows{{"resnet_50", 76.13, 67.55, 71.26, 71.26 - 67.55},
                              {"vgg_11", 69.02, 57.87, 62.69, 62.69 - 57.87},
                              {"squeezenet_1_1", 58.18, 42.66, 51.56, 51.56 - 42.66}};
    const std::string csv = report_to_csv(rows);
    CHECK(csv.rfind("model,canonical,distorted,corrected,improvement\n", 0) == 0);
    auto back = report_from_csv(csv);
    REQUIRE(back.size() == rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        CHECK(back[i].model == rows[i].model);
        CHECK(back[i].canonical == rows[i].canonical);
        CHECK(back[i].distorted == rows[i].distorted);
        CHECK(back[i].corrected == rows[i].corrected);
        CHECK(back[i].improvement == rows[i].improvement);
        // the improvement column is exactly the difference as reported
        CHECK(back[i].improvement == back[i].corrected - back[i].distorted);
    }
}

TEST_CASE("text table carries the expected columns") {
    std::vector<EvalRow> rows{{"vgg_11", 69.02, 57.87, 62.69, 4.82}};
    const std::string text = report_to_text(rows);
    CHECK(text.find("Model") != std::string::npos);
    CHECK(text.find("Canonical") != std::string::npos);
    CHECK(text.find("Distorted") != std::string::npos);
    CHECK(text.find("Corrected") != std::string::npos);
    CHECK(text.find("Improvement") != std::string::npos);
    CHECK(text.find("69.02") != std::string::npos);
    CHECK(text.find("4.82") != std::string::npos);
}

TEST_CASE("classifier logits shape and class checks") {
    RngStream rng(31);
    ClassifierConfig cfg;
    cfg.in_size = 32;
    cfg.num_classes = 5;
    auto clf = Classifier::create(cfg, rng);
    auto x = make_tensor({3, 3, 32, 32});
    auto logits = clf.forward(x);
    CHECK(logits->shape == std::vector<int>{3, 5});

    ClassifierConfig bad;
    bad.num_classes = 1;
    CHECK_THROWS_AS(Classifier::create(bad, rng), std::invalid_argument);
}

TEST_CASE("single-class dataset is rejected") {
    Dataset ds;
    ds.class_names = {"only"};
    ds.items.push_back({ImageU8(36, 36), 0});
    ds.items.push_back({ImageU8(36, 36), 0});
    ds.train_indices = {0};
    ds.val_indices = {1};
    RunConfig cfg = tiny_eval_config();
    CHECK_THROWS_AS(train_classifier(ds, cfg), std::invalid_argument);
}

TEST_CASE("classifier trains, saves and evaluates on a tiny shapes set") {
    // Desk-scale generalization is the acceptance suite's job; at unit scale
    // the classifier memorizes a small set (train and val splits overlap).
    RunConfig cfg = tiny_eval_config();
    cfg.clf_epochs = 24;
    auto ds = make_shapes_dataset(cfg.dataset_count, cfg.dataset_seed);
    ds.train_indices.insert(ds.train_indices.end(), ds.val_indices.begin(),
                            ds.val_indices.end());
    std::sort(ds.train_indices.begin(), ds.train_indices.end());
    ds.val_indices = ds.train_indices;
    auto tc = train_classifier(ds, cfg);
    CHECK(tc.val_top1 >= 0.70);  // abort threshold; memorization clears it

    const auto path = (std::filesystem::temp_directory_path() / "canonify_clf_test.ckpt").string();
    save_classifier(path, tc, cfg);
    auto back = load_classifier(path);
    CHECK(back.val_top1 == doctest::Approx(tc.val_top1));
    CHECK(back.class_names == tc.class_names);

    const double canonical = evaluate_top1(back, ds, EvalSplit::canonical, cfg, nullptr, 17);
    CHECK(canonical == doctest::Approx(tc.val_top1));

    // corrected without a generator is a contract error
    CHECK_THROWS_AS(evaluate_top1(back, ds, EvalSplit::corrected, cfg, nullptr, 17),
                    std::invalid_argument);

    // identity generator: corrected equals distorted within half a point
    Generator gen = Generator::create_identity(cfg);
    const double distorted = evaluate_top1(back, ds, EvalSplit::distorted, cfg, nullptr, 17);
    const double corrected = evaluate_top1(back, ds, EvalSplit::corrected, cfg, &gen, 17);
    CHECK(std::abs(corrected - distorted) <= 0.005 + 1e-9);
    std::filesystem::remove(path);
}

TEST_CASE("memorized ten-sample canonical split scores 1.0") {
    RunConfig cfg = tiny_eval_config();
    cfg.dataset_count = 16;
    cfg.clf_epochs = 60;
    cfg.clf_batch = 10;
    auto ds = make_shapes_dataset(cfg.dataset_count, cfg.dataset_seed);
    // train on exactly the ten samples that are then scored
    ds.train_indices = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    ds.val_indices = ds.train_indices;
    auto tc = train_classifier(ds, cfg);
    const double canonical = evaluate_top1(tc, ds, EvalSplit::canonical, cfg, nullptr, 17);
    CHECK(canonical == doctest::Approx(1.0));
}
