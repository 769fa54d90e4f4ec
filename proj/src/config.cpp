#include "config.h"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <variant>



namespace canonify {
namespace {

using KeyRef = std::variant<int*, real*, bool*, std::uint64_t*, std::string*,
                            std::array<int, 3>*>;

template <typename F>
void visit_keys(RunConfig& c, F&& f) {
    f("dataset.kind", KeyRef{&c.dataset_kind});
    f("dataset.count", KeyRef{&c.dataset_count});
    f("dataset.seed", KeyRef{&c.dataset_seed});
    f("dataset.path", KeyRef{&c.dataset_path});

    f("distortion.rot_deg", KeyRef{&c.distortion.rot_deg});
    f("distortion.translate_frac", KeyRef{&c.distortion.translate_frac});
    f("distortion.scale_min", KeyRef{&c.distortion.scale_min});
    f("distortion.scale_max", KeyRef{&c.distortion.scale_max});
    f("distortion.shear_deg", KeyRef{&c.distortion.shear_deg});
    f("distortion.brightness", KeyRef{&c.distortion.brightness});
    f("distortion.saturation", KeyRef{&c.distortion.saturation});
    f("distortion.contrast", KeyRef{&c.distortion.contrast});
    f("distortion.hue", KeyRef{&c.distortion.hue});
    f("distortion.blur_sigma_min", KeyRef{&c.distortion.blur_sigma_min});
    f("distortion.blur_sigma_max", KeyRef{&c.distortion.blur_sigma_max});

    f("sizes.resize_canonical", KeyRef{&c.sizes.resize_canonical});
    f("sizes.crop_canonical", KeyRef{&c.sizes.crop_canonical});
    f("sizes.resize_distorted", KeyRef{&c.sizes.resize_distorted});
    f("sizes.crop_distorted", KeyRef{&c.sizes.crop_distorted});

    f("model.unet_depth", KeyRef{&c.unet_depth});
    f("model.unet_base", KeyRef{&c.unet_base});
    f("model.loc_channels", KeyRef{&c.loc_channels});
    f("model.loc_hidden", KeyRef{&c.loc_hidden});
    f("model.disc_channels", KeyRef{&c.disc_channels});

    f("train.steps", KeyRef{&c.steps});
    f("train.epochs", KeyRef{&c.epochs});
    f("train.batch_size", KeyRef{&c.batch_size});
    f("train.lr_g", KeyRef{&c.lr_g});
    f("train.lr_d", KeyRef{&c.lr_d});
    f("train.lambda", KeyRef{&c.lambda});
    f("train.saturating", KeyRef{&c.saturating});
    f("train.beta1", KeyRef{&c.beta1});
    f("train.beta2", KeyRef{&c.beta2});
    f("train.adam_eps", KeyRef{&c.adam_eps});
    f("train.seed", KeyRef{&c.seed});
    f("train.log_every", KeyRef{&c.log_every});

    f("classifier.epochs", KeyRef{&c.clf_epochs});
    f("classifier.batch_size", KeyRef{&c.clf_batch});
    f("classifier.lr", KeyRef{&c.clf_lr});
    f("classifier.seed", KeyRef{&c.clf_seed});

    f("eval.seed", KeyRef{&c.eval_seed});
}

int parse_int(const std::string& v) {
    size_t used = 0;
    const int out = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument("not an integer: '" + v + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& v) {
    size_t used = 0;
    const unsigned long long out = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("not an unsigned integer: '" + v + "'");
    return static_cast<std::uint64_t>(out);
}

real parse_real(const std::string& v) {
    size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("not a number: '" + v + "'");
    return static_cast<real>(out);
}

bool parse_bool(const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("not a boolean: '" + v + "'");
}

std::array<int, 3> parse_int3(const std::string& v) {
    std::array<int, 3> out{};
    std::stringstream ss(v);
    std::string part;
    for (int i = 0; i < 3; ++i) {
        if (!std::getline(ss, part, ',')) {
            throw std::invalid_argument("expected three comma-separated integers: '" + v + "'");
        }
        out[static_cast<size_t>(i)] = parse_int(part);
    }
    if (std::getline(ss, part, ',')) {
        throw std::invalid_argument("expected three comma-separated integers: '" + v + "'");
    }
    return out;
}

std::string format_real(real v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << static_cast<double>(v);
    return ss.str();
}

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

}  // namespace

void RunConfig::set(const std::string& dotted_key, const std::string& value) {
    bool found = false;
    visit_keys(*this, [&](const char* name, KeyRef ref) {
        if (found || dotted_key != name) return;
        found = true;
        std::visit(
            [&](auto* ptr) {
                using T = std::remove_pointer_t<decltype(ptr)>;
                if constexpr (std::is_same_v<T, int>) {
                    *ptr = parse_int(value);
                } else if constexpr (std::is_same_v<T, real>) {
                    *ptr = parse_real(value);
                } else if constexpr (std::is_same_v<T, bool>) {
                    *ptr = parse_bool(value);
                } else if constexpr (std::is_same_v<T, std::uint64_t>) {
                    *ptr = parse_u64(value);
                } else if constexpr (std::is_same_v<T, std::string>) {
                    *ptr = value;
                } else {
                    *ptr = parse_int3(value);
                }
            },
            ref);
    });
    if (!found) throw std::invalid_argument("unknown configuration key '" + dotted_key + "'");
}

std::string RunConfig::get(const std::string& dotted_key) const {
    std::string out;
    bool found = false;
    visit_keys(const_cast<RunConfig&>(*this), [&](const char* name, KeyRef ref) {
        if (found || dotted_key != name) return;
        found = true;
        std::visit(
            [&](auto* ptr) {
                using T = std::remove_pointer_t<decltype(ptr)>;
                if constexpr (std::is_same_v<T, real>) {
                    out = format_real(*ptr);
                } else if constexpr (std::is_same_v<T, bool>) {
                    out = *ptr ? "true" : "false";
                } else if constexpr (std::is_same_v<T, std::string>) {
                    out = *ptr;
                } else if constexpr (std::is_same_v<T, std::array<int, 3>>) {
                    out = std::to_string((*ptr)[0]) + "," + std::to_string((*ptr)[1]) + "," +
                          std::to_string((*ptr)[2]);
                } else {
                    out = std::to_string(*ptr);
                }
            },
            ref);
    });
    if (!found) throw std::invalid_argument("unknown configuration key '" + dotted_key + "'");
    return out;
}

void RunConfig::validate() const {
    if (dataset_kind != "shapes" && dataset_kind != "folder") {
        throw std::invalid_argument("dataset.kind must be 'shapes' or 'folder'");
    }
    if (dataset_kind == "folder" && dataset_path.empty()) {
        throw std::invalid_argument("dataset.path required for folder datasets");
    }
    if (dataset_kind == "shapes" && dataset_count < 2) {
        throw std::invalid_argument("dataset.count must be >= 2");
    }
    distortion.validate();
    if (batch_size < 2) {
        throw std::invalid_argument("train.batch_size must be >= 2 (batch norm)");
    }
    if (lambda < 0) throw std::invalid_argument("train.lambda must be >= 0");
    if (steps <= 0 && epochs <= 0) {
        throw std::invalid_argument("one of train.steps or train.epochs must be positive");
    }
    if (sizes.crop_canonical > sizes.resize_canonical ||
        sizes.crop_distorted > sizes.resize_distorted) {
        throw std::invalid_argument("sizes: crops may not exceed resize targets");
    }
    if (sizes.crop_distorted % 8 != 0) {
        throw std::invalid_argument("sizes.crop_distorted must be divisible by 8 (localization)");
    }
    if (sizes.crop_canonical % (1 << unet_depth) != 0) {
        throw std::invalid_argument("sizes.crop_canonical must be divisible by 2^unet_depth");
    }
    if (sizes.crop_canonical % 8 != 0) {
        throw std::invalid_argument("sizes.crop_canonical must be divisible by 8");
    }
    if (sizes.crop_canonical > sizes.crop_distorted) {
        throw std::invalid_argument("sizes: canonical crop may not exceed distorted crop");
    }
}

LocConfig RunConfig::loc_config() const {
    LocConfig cfg;
    cfg.in_size = sizes.crop_distorted;
    cfg.channels = loc_channels;
    cfg.hidden = loc_hidden;
    return cfg;
}

UNetConfig RunConfig::unet_config() const {
    UNetConfig cfg;
    cfg.depth = unet_depth;
    cfg.base_channels = unet_base;
    return cfg;
}

DiscConfig RunConfig::disc_config() const {
    DiscConfig cfg;
    cfg.in_size = sizes.crop_canonical;
    cfg.channels = disc_channels;
    return cfg;
}

RunConfig config_from_ini_text(const std::string& text, const std::string& origin) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']' || t.size() < 3) {
                throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                            ": malformed section header '" + t + "'");
            }
            section = t.substr(1, t.size() - 2);
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                        ": expected 'key = value', got '" + t + "'");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (section.empty()) {
            throw std::invalid_argument(origin + ":" + std::to_string(line_no) +
                                        ": key '" + key + "' outside any [section]");
        }
        try {
            cfg.set(section + "." + key, value);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return config_from_ini_text(ss.str(), path);
}

nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    visit_keys(const_cast<RunConfig&>(cfg), [&](const char* name, KeyRef) {
        j[name] = cfg.get(name);
    });
    return j;
}

RunConfig config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    for (auto it = j.begin(); it != j.end(); ++it) {
        cfg.set(it.key(), it.value().get<std::string>());
    }
    return cfg;
}

}  // namespace canonify
