#include "pipeline.h"

#include <cmath>
#include <cstring>

#include "core/parallel.h"
#include "image/png_io.h"

namespace canonify {
namespace {

constexpr std::uint64_t kInitKey = 0x696e6974;   // model initialization
constexpr std::uint64_t kOrderKey = 0x6f726472;  // per-epoch sample order

double stable_bce_mean(const std::vector<real>& logits, double label) {
    double acc = 0;
    for (real z : logits) {
        acc += std::max(static_cast<double>(z), 0.0) - static_cast<double>(z) * label +
               std::log1p(std::exp(-std::abs(static_cast<double>(z))));
    }
    return acc / static_cast<double>(logits.size());
}

double mse_mean(const std::vector<real>& a, const std::vector<real>& b) {
    double acc = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

void copy_image_into(const ImageF& img, Tensor& t, int sample) {
    const size_t n = img.data.size();
    std::memcpy(t.data.data() + static_cast<size_t>(sample) * n, img.data.data(),
                n * sizeof(real));
}

ImageF image_from_tensor(const Tensor& t, int sample, ImageSpace space) {
    ImageF img(t.dim(1), t.dim(2), t.dim(3), space);
    std::memcpy(img.data.data(), t.data.data() + static_cast<size_t>(sample) * img.data.size(),
                img.data.size() * sizeof(real));
    return img;
}

}  // namespace

Generator Generator::create(const RunConfig& cfg, RngStream& rng) {
    Generator g;
    g.stn = Stn::create(cfg.loc_config(), cfg.sizes.crop_canonical, rng);
    UNetConfig ucfg = cfg.unet_config();
    g.unet = UNet::create(ucfg, rng);
    return g;
}

Generator Generator::create_identity(const RunConfig& cfg) {
    RngStream rng(0);
    Generator g = create(cfg, rng);
    NamedTensors named;
    g.unet.params("unet", named);
    for (auto& [name, t] : named.items) std::fill(t->data.begin(), t->data.end(), real(0));
    NamedTensors loc;
    g.stn.params("stn", loc);
    for (auto& [name, t] : loc.items) std::fill(t->data.begin(), t->data.end(), real(0));
    g.stn.loc.f2.b->data = {1, 0, 0, 0, 1, 0};
    return g;
}

std::string metrics_to_csv(const std::vector<MetricsRow>& rows) {
    std::string out = "step,mse,g_adv,d_loss,d_acc\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g\n",
                      static_cast<long long>(r.step), r.mse, r.g_adv, r.d_loss, r.d_acc);
        out += buf;
    }
    return out;
}

TrainAbortError::TrainAbortError(std::uint64_t s, std::int64_t e, std::int64_t b)
    : std::runtime_error("training aborted: non-finite loss at batch key (seed=" +
                         std::to_string(s) + ", epoch=" + std::to_string(e) +
                         ", batch=" + std::to_string(b) + ")"),
      seed(s),
      epoch(e),
      batch(b) {}

ImageF canonical_image(const ImageU8& raw, const PairSizes& sizes) {
    return center_crop(resize_shorter(to_float(raw), sizes.resize_canonical),
                       sizes.crop_canonical, sizes.crop_canonical);
}

Normalization compute_normalization(const Dataset& dataset, const PairSizes& sizes) {
    const auto& idx = dataset.train_indices;
    if (idx.empty()) throw std::invalid_argument("normalization: empty training split");
    std::vector<std::array<double, 6>> partial(idx.size());
    parallel_for_each(static_cast<std::int64_t>(idx.size()), [&](std::int64_t i) {
        const ImageF img = canonical_image(dataset.items[static_cast<size_t>(idx[i])].image, sizes);
        std::array<double, 6> acc{};
        const size_t np = static_cast<size_t>(img.h) * img.w;
        for (int ch = 0; ch < 3; ++ch) {
            const real* p = img.plane(ch);
            double s = 0, s2 = 0;
            for (size_t k = 0; k < np; ++k) {
                s += p[k];
                s2 += static_cast<double>(p[k]) * p[k];
            }
            acc[static_cast<size_t>(ch)] = s;
            acc[static_cast<size_t>(ch) + 3] = s2;
        }
        partial[static_cast<size_t>(i)] = acc;
    });
    const double n = static_cast<double>(idx.size()) *
                     static_cast<double>(sizes.crop_canonical) * sizes.crop_canonical;
    Normalization norm;
    for (int ch = 0; ch < 3; ++ch) {
        double s = 0, s2 = 0;
        for (const auto& acc : partial) {
            s += acc[static_cast<size_t>(ch)];
            s2 += acc[static_cast<size_t>(ch) + 3];
        }
        const double mean = s / n;
        const double var = std::max(0.0, s2 / n - mean * mean);
        norm.mean[ch] = static_cast<real>(mean);
        norm.stdev[ch] = static_cast<real>(std::max(std::sqrt(var), 1e-6));
    }
    return norm;
}

Trainer::Trainer(const RunConfig& cfg, const Dataset& dataset) : cfg_(cfg), data_(&dataset) {
    cfg_.validate();
    if (dataset.items.empty()) throw std::invalid_argument("trainer: empty dataset");
    norm_ = compute_normalization(dataset, cfg_.sizes);
    init_models();
}

Trainer::Trainer(const RunConfig& cfg, const Dataset& dataset, const CheckpointData& resume)
    : cfg_(cfg), data_(&dataset) {
    cfg_.validate();
    if (dataset.items.empty()) throw std::invalid_argument("trainer: empty dataset");
    init_models();
    restore(resume);
}

void Trainer::init_models() {
    RngStream rng(cfg_.seed, kInitKey);
    gen_ = Generator::create(cfg_, rng);
    disc_ = Discriminator::create(cfg_.disc_config(), rng);
    gen_named_ = NamedTensors{};
    disc_named_ = NamedTensors{};
    gen_.params("gen", gen_named_);
    disc_.params("disc", disc_named_);
    std::vector<TensorPtr> gp, dp;
    for (auto& [n, t] : gen_named_.items) gp.push_back(t);
    for (auto& [n, t] : disc_named_.items) dp.push_back(t);
    adam_g_ = std::make_unique<Adam>(std::move(gp), cfg_.lr_g, cfg_.beta1, cfg_.beta2,
                                     cfg_.adam_eps);
    adam_d_ = std::make_unique<Adam>(std::move(dp), cfg_.lr_d, cfg_.beta1, cfg_.beta2,
                                     cfg_.adam_eps);
}

std::int64_t Trainer::steps_per_epoch() const {
    const std::int64_t n = static_cast<std::int64_t>(data_->train_indices.size());
    return std::max<std::int64_t>(1, n / cfg_.batch_size);
}

std::int64_t Trainer::total_steps() const {
    if (cfg_.steps > 0) return cfg_.steps;
    return static_cast<std::int64_t>(cfg_.epochs) * steps_per_epoch();
}

Trainer::Batch Trainer::make_batch(std::int64_t step) const {
    const std::int64_t spe = steps_per_epoch();
    Batch batch;
    batch.epoch = step / spe;
    batch.batch_idx = step % spe;

    std::vector<int> order = data_->train_indices;
    RngStream order_rng(cfg_.seed, kOrderKey, static_cast<std::uint64_t>(batch.epoch));
    order_rng.shuffle(order);

    const int B = cfg_.batch_size;
    batch.y = make_tensor({B, 3, cfg_.sizes.crop_canonical, cfg_.sizes.crop_canonical});
    batch.x = make_tensor({B, 3, cfg_.sizes.crop_distorted, cfg_.sizes.crop_distorted});
    parallel_for_each(B, [&](std::int64_t i) {
        const size_t pos = static_cast<size_t>(batch.batch_idx) * B + static_cast<size_t>(i);
        const int idx = order[pos % order.size()];
        RngStream rng = pair_stream(cfg_.seed, static_cast<std::uint64_t>(batch.epoch),
                                    static_cast<std::uint64_t>(batch.batch_idx),
                                    static_cast<std::uint64_t>(i));
        const TrainingPair pair = make_training_pair(data_->items[static_cast<size_t>(idx)].image,
                                                     cfg_.distortion, cfg_.sizes, norm_, rng);
        copy_image_into(pair.y, *batch.y, static_cast<int>(i));
        copy_image_into(pair.x, *batch.x, static_cast<int>(i));
    });
    return batch;
}

void Trainer::step() {
    const Batch batch = make_batch(step_);
    auto y_hat = gen_.forward(batch.x);

    double d_loss_value = 0, d_acc_value = 0, g_adv_value = 0;
    TensorPtr fake_for_g;
    if (cfg_.lambda > 0) {
        auto d_real = disc_.forward(batch.y, /*train=*/true);
        auto d_fake = disc_.forward(detach(y_hat), /*train=*/true);
        auto dl = d_loss(d_real, d_fake);
        adam_d_->zero_grad();
        backward(dl);
        adam_d_->step();
        d_loss_value = dl->item();
        d_acc_value = d_accuracy(d_real, d_fake);

        // The generator's half-step treats the discriminator as a frozen
        // critic: eval-mode batch norm, so the critique reflects absolute
        // statistics rather than the fake batch's own.
        fake_for_g = disc_.forward(y_hat, /*train=*/false);
        g_adv_value = cfg_.saturating ? -stable_bce_mean(fake_for_g->data, 0.0)
                                      : stable_bce_mean(fake_for_g->data, 1.0);
    }
    auto gl = g_loss(batch.y, y_hat, fake_for_g, cfg_.lambda, cfg_.saturating);
    adam_g_->zero_grad();
    backward(gl);
    adam_g_->step();

    const double mse_value = mse_mean(y_hat->data, batch.y->data);
    if (!std::isfinite(mse_value) || !std::isfinite(g_adv_value) ||
        !std::isfinite(d_loss_value)) {
        throw TrainAbortError(cfg_.seed, batch.epoch, batch.batch_idx);
    }
    if (step_ % cfg_.log_every == 0 || step_ + 1 == total_steps()) {
        metrics_.push_back({step_, mse_value, g_adv_value, d_loss_value, d_acc_value});
    }
    ++step_;
}

void Trainer::run() {
    const std::int64_t total = total_steps();
    while (step_ < total) step();
}

CheckpointData Trainer::make_checkpoint() const {
    CheckpointData ckpt;
    for (const auto& [name, t] : gen_named_.items) ckpt.tensors.add(name, t);
    for (const auto& [name, t] : disc_named_.items) ckpt.tensors.add(name, t);
    NamedTensors buffers;
    disc_.buffers("disc", buffers);
    for (const auto& [name, t] : buffers.items) ckpt.tensors.add(name, t);

    auto add_adam = [&](const std::string& prefix, const Adam& opt, const NamedTensors& named) {
        for (size_t i = 0; i < named.items.size(); ++i) {
            const auto& [name, param] = named.items[i];
            ckpt.tensors.add(prefix + "." + name + ".m",
                             tensor_of(param->shape, const_cast<Adam&>(opt).m(i)));
            ckpt.tensors.add(prefix + "." + name + ".v",
                             tensor_of(param->shape, const_cast<Adam&>(opt).v(i)));
        }
        ckpt.tensors.add(prefix + ".t",
                         scalar_tensor(static_cast<real>(opt.step_count())));
    };
    add_adam("adam_g", *adam_g_, gen_named_);
    add_adam("adam_d", *adam_d_, disc_named_);

    ckpt.meta["kind"] = "generator";
    ckpt.meta["config"] = config_to_json(cfg_);
    ckpt.meta["normalization"] = {
        {"mean", {norm_.mean[0], norm_.mean[1], norm_.mean[2]}},
        {"std", {norm_.stdev[0], norm_.stdev[1], norm_.stdev[2]}}};
    ckpt.meta["rng"] = {{"step", step_}};
    return ckpt;
}

void Trainer::restore(const CheckpointData& ckpt) {
    if (ckpt.meta.value("kind", "") != "generator") {
        throw std::runtime_error("resume: checkpoint is not a generator checkpoint");
    }
    auto copy_into = [&](const NamedTensors& named) {
        for (const auto& [name, t] : named.items) {
            TensorPtr src = ckpt.tensors.find(name);
            if (!src) throw std::runtime_error("resume: missing tensor '" + name + "'");
            if (src->shape != t->shape) {
                throw std::runtime_error("resume: shape mismatch for '" + name + "'");
            }
            t->data = src->data;
        }
    };
    copy_into(gen_named_);
    copy_into(disc_named_);
    NamedTensors buffers;
    disc_.buffers("disc", buffers);
    copy_into(buffers);

    auto restore_adam = [&](const std::string& prefix, Adam& opt, const NamedTensors& named) {
        for (size_t i = 0; i < named.items.size(); ++i) {
            const auto& name = named.items[i].first;
            TensorPtr m = ckpt.tensors.find(prefix + "." + name + ".m");
            TensorPtr v = ckpt.tensors.find(prefix + "." + name + ".v");
            if (!m || !v) throw std::runtime_error("resume: missing optimizer state for " + name);
            opt.m(i) = m->data;
            opt.v(i) = v->data;
        }
        TensorPtr t = ckpt.tensors.find(prefix + ".t");
        if (!t) throw std::runtime_error("resume: missing optimizer step counter");
        opt.set_step_count(static_cast<std::int64_t>(t->data[0]));
    };
    restore_adam("adam_g", *adam_g_, gen_named_);
    restore_adam("adam_d", *adam_d_, disc_named_);

    const auto& nj = ckpt.meta.at("normalization");
    for (int ch = 0; ch < 3; ++ch) {
        norm_.mean[ch] = nj.at("mean")[static_cast<size_t>(ch)].get<real>();
        norm_.stdev[ch] = nj.at("std")[static_cast<size_t>(ch)].get<real>();
    }
    step_ = ckpt.meta.at("rng").at("step").get<std::int64_t>();
}

LoadedGenerator load_generator(const std::string& path) {
    CheckpointData ckpt = load_checkpoint(path);
    if (ckpt.meta.value("kind", "") != "generator") {
        throw std::runtime_error(path + ": not a generator checkpoint");
    }
    LoadedGenerator lg{config_from_json(ckpt.meta.at("config")), {}, {}};
    lg.gen = Generator::create_identity(lg.cfg);
    NamedTensors named;
    lg.gen.params("gen", named);
    for (auto& [name, t] : named.items) {
        TensorPtr src = ckpt.tensors.find(name);
        if (!src) throw std::runtime_error(path + ": missing tensor '" + name + "'");
        if (src->shape != t->shape) {
            throw std::runtime_error(path + ": shape mismatch for '" + name + "'");
        }
        t->data = src->data;
    }
    const auto& nj = ckpt.meta.at("normalization");
    for (int ch = 0; ch < 3; ++ch) {
        lg.norm.mean[ch] = nj.at("mean")[static_cast<size_t>(ch)].get<real>();
        lg.norm.stdev[ch] = nj.at("std")[static_cast<size_t>(ch)].get<real>();
    }
    return lg;
}

CorrectResult correct_image_data(const Generator& gen, const RunConfig& cfg,
                                 const Normalization& norm, const ImageU8& input) {
    if (input.w < 8 || input.h < 8) {
        throw std::invalid_argument("correct: image below minimum size (8x8)");
    }
    ImageF prepared = center_crop(resize_shorter(to_float(input), cfg.sizes.resize_distorted),
                                  cfg.sizes.crop_distorted, cfg.sizes.crop_distorted);
    ImageF input_panel = center_crop(prepared, cfg.sizes.crop_canonical,
                                     cfg.sizes.crop_canonical);
    ImageF x = prepared;
    normalize(x, norm);

    auto xt = make_tensor({1, 3, x.h, x.w});
    std::memcpy(xt->data.data(), x.data.data(), x.data.size() * sizeof(real));
    auto x_s = gen.stn.forward(xt);
    auto y_hat = gen.unet.correct(x_s);

    ImageF xs_img = image_from_tensor(*x_s, 0, ImageSpace::normalized);
    denormalize(xs_img, norm);
    clamp01(xs_img);
    ImageF out_img = image_from_tensor(*y_hat, 0, ImageSpace::normalized);
    denormalize(out_img, norm);
    clamp01(out_img);

    CorrectResult result;
    result.corrected = to_u8(out_img);

    // input | x_s | y_hat side by side with 2 px separators
    const int c = cfg.sizes.crop_canonical;
    ImageU8 trip(3 * c + 4, c);
    std::fill(trip.data.begin(), trip.data.end(), std::uint8_t(255));
    const ImageU8 panels[3] = {to_u8(input_panel), to_u8(xs_img), to_u8(out_img)};
    for (int p = 0; p < 3; ++p) {
        const int x0 = p * (c + 2);
        for (int y = 0; y < c; ++y) {
            std::memcpy(trip.px(y, x0), panels[p].px(y, 0), static_cast<size_t>(c) * 3);
        }
    }
    result.triptych = std::move(trip);
    return result;
}

void correct_image_file(const LoadedGenerator& lg, const std::string& in_path,
                        const std::string& out_path, const std::string& triptych_path) {
    const ImageU8 input = load_png(in_path);
    const CorrectResult result = correct_image_data(lg.gen, lg.cfg, lg.norm, input);
    save_png(out_path, result.corrected);
    if (!triptych_path.empty()) save_png(triptych_path, result.triptych);
}

}  // namespace canonify
