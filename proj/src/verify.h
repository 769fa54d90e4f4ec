#pragma once

#include <string>
#include <vector>

namespace canonify {

struct VerifyProperty {
    std::string name;
    bool pass = false;
    std::string detail;
};

// Runs the invariant battery: gradient checks for every differentiable op and
// the composed generator, sampler exactness, the convolution and channel-std
// oracles, the RGB/HSV round trip, and assorted fixed-point checks. filter
// selects properties by substring; empty runs everything.
std::vector<VerifyProperty> run_verify(const std::string& filter = "");

std::vector<std::string> verify_property_names();

}  // namespace canonify
