#include <doctest.h>

#include "core/kernels.h"
#include "verify.h"

using namespace canonify;

TEST_CASE("verify battery passes on a fresh build") {
    const auto props = run_verify("");
    CHECK(props.size() >= 20);
    for (const auto& p : props) {
        INFO(p.name, ": ", p.detail);
        CHECK(p.pass);
    }
}

TEST_CASE("filter selects matching properties") {
    const auto props = run_verify("grid_sample");
    REQUIRE(props.size() == 2);
    CHECK(props[0].name == "grad.grid_sample.input");
    CHECK(props[1].name == "grad.grid_sample.coords");

    CHECK(run_verify("definitely-no-such-property").empty());
}

TEST_CASE("an injected sign bug in the bilinear backward is caught by name") {
    testing::bilinear_coord_grad_sign_flip = true;
    const auto props = run_verify("grad.grid_sample.coords");
    testing::bilinear_coord_grad_sign_flip = false;
    REQUIRE(props.size() == 1);
    CHECK_FALSE(props[0].pass);
    CHECK(props[0].name == "grad.grid_sample.coords");

    // and the battery recovers once the fault is removed
    const auto clean = run_verify("grad.grid_sample.coords");
    CHECK(clean[0].pass);
}
