#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dataset.h"
#include "image/png_io.h"

using namespace canonify;
namespace fs = std::filesystem;

TEST_CASE("shapes dataset is deterministic") {
    auto a = make_shapes_dataset(64, 99);
    auto b = make_shapes_dataset(64, 99);
    REQUIRE(a.items.size() == 64);
    for (size_t i = 0; i < a.items.size(); ++i) {
        CHECK(a.items[i].label == b.items[i].label);
        CHECK(a.items[i].image.data == b.items[i].image.data);
    }
    auto c = make_shapes_dataset(64, 100);
    bool any_diff = false;
    for (size_t i = 0; i < a.items.size() && !any_diff; ++i) {
        any_diff = a.items[i].image.data != c.items[i].image.data;
    }
    CHECK(any_diff);
}

TEST_CASE("shapes dataset class balance and split") {
    auto ds = make_shapes_dataset(5000, 7);
    std::vector<int> counts(8, 0);
    for (const auto& item : ds.items) {
        REQUIRE(item.label >= 0);
        REQUIRE(item.label < 8);
        ++counts[static_cast<size_t>(item.label)];
    }
    for (int c : counts) {
        CHECK(c >= 5000 / 8 - 100);  // within 2% of uniform
        CHECK(c <= 5000 / 8 + 100);
    }
    CHECK(ds.val_indices.size() == 500);
    CHECK(ds.train_indices.size() == 4500);

    // split partitions the index range
    std::vector<bool> seen(5000, false);
    for (int i : ds.train_indices) seen[static_cast<size_t>(i)] = true;
    for (int i : ds.val_indices) {
        CHECK(!seen[static_cast<size_t>(i)]);
        seen[static_cast<size_t>(i)] = true;
    }
    for (bool s : seen) CHECK(s);
}

TEST_CASE("shapes images have visible foreground") {
    auto ds = make_shapes_dataset(16, 3);
    for (const auto& item : ds.items) {
        const auto& img = item.image;
        CHECK(img.w == 96);
        CHECK(img.h == 96);
        // some pixels differ from the corner background
        const std::uint8_t* corner = img.px(0, 0);
        int diff = 0;
        for (int y = 0; y < img.h; ++y) {
            for (int x = 0; x < img.w; ++x) {
                const std::uint8_t* p = img.px(y, x);
                if (std::abs(p[0] - corner[0]) > 25 || std::abs(p[1] - corner[1]) > 25 ||
                    std::abs(p[2] - corner[2]) > 25) {
                    ++diff;
                }
            }
        }
        CHECK(diff > 100);
    }
}

TEST_CASE("folder dataset from class subdirectories") {
    const auto dir = fs::temp_directory_path() / "canonify_folder_ds";
    fs::remove_all(dir);
    fs::create_directories(dir / "cats");
    fs::create_directories(dir / "dogs");
    auto shapes = make_shapes_dataset(10, 5);
    for (int i = 0; i < 10; ++i) {
        const auto sub = i < 5 ? "cats" : "dogs";
        save_png((dir / sub / ("img" + std::to_string(i) + ".png")).string(),
                 shapes.items[static_cast<size_t>(i)].image);
    }
    auto ds = load_folder_dataset(dir.string(), 1);
    CHECK(ds.items.size() == 10);
    CHECK(ds.class_names == std::vector<std::string>{"cats", "dogs"});
    int cats = 0;
    for (const auto& item : ds.items) cats += item.label == 0 ? 1 : 0;
    CHECK(cats == 5);
    CHECK(ds.val_indices.size() == 1);

    // a single class is rejected
    fs::remove_all(dir / "dogs");
    CHECK_THROWS(load_folder_dataset(dir.string(), 1));
    fs::remove_all(dir);
}

TEST_CASE("folder dataset from manifest") {
    const auto dir = fs::temp_directory_path() / "canonify_manifest_ds";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto shapes = make_shapes_dataset(6, 8);
    std::ofstream manifest(dir / "labels.csv");
    manifest << "path,label\n";
    for (int i = 0; i < 6; ++i) {
        const auto name = "img" + std::to_string(i) + ".png";
        save_png((dir / name).string(), shapes.items[static_cast<size_t>(i)].image);
        manifest << name << "," << (i % 2) << "\n";
    }
    manifest.close();
    auto ds = load_folder_dataset(dir.string(), 2);
    CHECK(ds.items.size() == 6);
    CHECK(ds.num_classes() == 2);
    CHECK(ds.items[3].label == 1);
    fs::remove_all(dir);
}

TEST_CASE("missing folder is an error") {
    CHECK_THROWS(load_folder_dataset("/nonexistent/canonify", 0));
}
