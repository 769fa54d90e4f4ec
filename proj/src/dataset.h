#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "image/image.h"

namespace canonify {

struct LabeledImage {
    ImageU8 image;
    int label = 0;
};

struct Dataset {
    std::vector<LabeledImage> items;
    std::vector<std::string> class_names;
    std::vector<int> train_indices;
    std::vector<int> val_indices;

    int num_classes() const { return static_cast<int>(class_names.size()); }
};

// Procedural 8-class dataset: {circle, square, triangle, star} x {solid,
// ring}, rendered at 96x96 with random foreground/background colors and
// placement. Deterministic per (count, seed); label assignment is stratified
// so the class balance is exact up to the remainder. Split is 90/10.
Dataset make_shapes_dataset(int count, std::uint64_t seed);

// Loads PNGs either from a labels.csv manifest ("path,label" rows) or from
// one subdirectory per class. The seed fixes the train/val shuffle.
Dataset load_folder_dataset(const std::string& dir, std::uint64_t seed);

}  // namespace canonify
