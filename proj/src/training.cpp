#include "svc/training.hpp"

#include "svc/errors.hpp"
#include "svc/losses.hpp"
#include "svc/nn/optim.hpp"
#include "svc/nn/rng.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <set>

namespace svc {

void TrainingConfig::validate() const {
    if (alpha < 0.0)
        throw ConfigError("alpha must be >= 0, got " + std::to_string(alpha));
    if (total_epochs < 1)
        throw ConfigError("total_epochs must be >= 1");
    if (vae_warmup_epochs < 0 || vae_warmup_epochs > total_epochs)
        throw ConfigError("vae_warmup_epochs must lie in [0, total_epochs]");
    if (!(learning_rate > 0.0))
        throw ConfigError("learning_rate must be positive");
    if (!(rmsprop_decay > 0.0) || !(rmsprop_decay < 1.0))
        throw ConfigError("rmsprop_decay must lie in (0, 1)");
    if (!(rmsprop_epsilon > 0.0))
        throw ConfigError("rmsprop_epsilon must be positive");
    if (batch_size < 1)
        throw ConfigError("batch_size must be >= 1");
    if (critic_steps_per_gen_step < 1)
        throw ConfigError("critic_steps_per_gen_step must be >= 1");
    if (!(weight_clip > 0.0))
        throw ConfigError("weight_clip must be positive");
    if (checkpoint_every_epochs < 0)
        throw ConfigError("checkpoint_every_epochs must be >= 0");
}

namespace {

struct FlatData {
    Eigen::MatrixXf x;        // sp_dim x N log-spectrum frames
    Eigen::VectorXf f0;       // N scaled F0 values
    std::vector<int> singer;  // N
};

FlatData flatten(const TrainingData& data, const ModelConfig& mc) {
    Eigen::Index n = 0;
    std::set<int> singers;
    for (const auto& u : data.utterances) {
        if (u.singer_id < 0 || u.singer_id >= mc.n_singers)
            throw CompatibilityError("utterance singer id " +
                                     std::to_string(u.singer_id) +
                                     " outside model table of " +
                                     std::to_string(mc.n_singers));
        if (u.features.log_sp_norm.rows() != mc.sp_dim && u.features.n_frames() > 0)
            throw ShapeError("utterance has " +
                             std::to_string(u.features.log_sp_norm.rows()) +
                             " bins, model expects " + std::to_string(mc.sp_dim));
        singers.insert(u.singer_id);
        n += u.features.n_frames();
    }
    if (n == 0)
        throw InsufficientDataError("no frames to train on");
    if (singers.size() < 2)
        throw InsufficientDataError("training needs at least two distinct singers, got " +
                                    std::to_string(singers.size()));

    FlatData flat;
    flat.x.resize(mc.sp_dim, n);
    flat.f0.resize(n);
    flat.singer.resize(static_cast<std::size_t>(n));
    Eigen::Index at = 0;
    for (const auto& u : data.utterances) {
        const Eigen::Index t = u.features.n_frames();
        flat.x.middleCols(at, t) = u.features.log_sp_norm.cast<float>();
        flat.f0.segment(at, t) = u.features.f0_scaled.cast<float>();
        std::fill_n(flat.singer.begin() + at, t, u.singer_id);
        at += t;
    }
    return flat;
}

// Copy of the model with fresh (empty) activation caches: constructing a new
// network and copying parameter values over keeps snapshots small.
VawGanModel snapshot_params(VawGanModel& m) {
    VawGanModel out(m.config());
    nn::ParamSet<float> src = m.all_params();
    nn::ParamSet<float> dst = out.all_params();
    for (std::size_t i = 0; i < src.count(); ++i) {
        const auto& s = src.views()[i];
        const auto& d = dst.views()[i];
        Eigen::Map<Eigen::VectorXf>(d.value, d.size()) =
            Eigen::Map<const Eigen::VectorXf>(s.value, s.size());
    }
    return out;
}

std::shared_ptr<ModelCheckpoint> make_checkpoint(VawGanModel& model,
                                                 const TrainingData& data,
                                                 const TrainingConfig& config,
                                                 std::int64_t step) {
    auto ck = std::make_shared<ModelCheckpoint>(snapshot_params(model));
    ck->sample_rate_hz = data.sample_rate_hz;
    ck->frame_shift_us = data.frame_shift_us;
    ck->scaler = data.scaler;
    ck->f0_stats = data.f0_stats;
    ck->roster = data.roster;
    ck->training_step = step;
    ck->seed = config.seed;
    return ck;
}

} // namespace

ModelCheckpoint train(const TrainingData& data, const ModelConfig& model_config,
                      const TrainingConfig& config, const TrainHooks& hooks) {
    model_config.validate();
    config.validate();
    const FlatData flat = flatten(data, model_config);
    const Eigen::Index n_total = flat.x.cols();
    const int latent = model_config.latent_dim;
    const bool use_f0 = model_config.condition_on_f0;

    VawGanModel model(model_config);
    nn::Rng rng(config.seed);
    model.init_params(rng);

    const auto lr = static_cast<float>(config.learning_rate);
    const auto decay = static_cast<float>(config.rmsprop_decay);
    const auto eps = static_cast<float>(config.rmsprop_epsilon);
    nn::RmsProp<float> opt_gen(lr, decay, eps);
    nn::RmsProp<float> opt_critic(lr, decay, eps);
    const auto clip = static_cast<float>(config.weight_clip);
    const auto alpha = static_cast<float>(config.alpha);
    const int k_critic = config.critic_steps_per_gen_step;

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n_total));
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});

    std::int64_t step = 0;
    std::int64_t group = 0;  // persists across epochs so short epochs still
                             // reach generator slots in the critic rotation
    std::shared_ptr<ModelCheckpoint> last_good;

    Eigen::MatrixXf xb, noise, z, fake, dfake, dmean, dlog_var;
    Eigen::VectorXf f0b;
    std::vector<int> sids;

    for (int epoch = 1; epoch <= config.total_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        rng.shuffle(perm);
        const bool adversarial = epoch > config.vae_warmup_epochs;

        double kl_sum = 0.0, recon_sum = 0.0, j_sum = 0.0;
        std::int64_t gen_batches = 0, critic_batches = 0;

        for (Eigen::Index start = 0; start < n_total; start += config.batch_size) {
            const Eigen::Index n =
                std::min<Eigen::Index>(config.batch_size, n_total - start);
            xb.resize(model_config.sp_dim, n);
            f0b.resize(use_f0 ? n : 0);
            sids.resize(static_cast<std::size_t>(n));
            for (Eigen::Index i = 0; i < n; ++i) {
                const Eigen::Index src = perm[static_cast<std::size_t>(start + i)];
                xb.col(i) = flat.x.col(src);
                if (use_f0) f0b[i] = flat.f0[src];
                sids[static_cast<std::size_t>(i)] =
                    flat.singer[static_cast<std::size_t>(src)];
            }

            const bool critic_turn = adversarial && (group % (k_critic + 1)) < k_critic;
            if (adversarial) ++group;

            const float inv_n = 1.0f / static_cast<float>(n);
            LatentCode code = model.encode(xb);
            noise.resize(latent, n);
            for (Eigen::Index i = 0; i < noise.size(); ++i)
                noise.data()[i] = static_cast<float>(rng.gaussian());
            z = nn::sample_latent(code, noise);
            fake = model.decode_frames(z, sids, f0b);

            if (critic_turn) {
                nn::ParamSet<float> ps_c = model.critic_params();
                ps_c.zero_grads();
                const Eigen::MatrixXf s_real = model.critic().forward(xb);
                model.critic().backward(
                    Eigen::MatrixXf::Constant(1, n, -inv_n), false);
                const Eigen::MatrixXf s_fake = model.critic().forward(fake);
                model.critic().backward(
                    Eigen::MatrixXf::Constant(1, n, inv_n), false);
                opt_critic.step(ps_c);
                ps_c.clip_values(clip);

                const float j = s_real.mean() - s_fake.mean();
                if (!std::isfinite(j))
                    throw DivergenceError(
                        "critic objective diverged at step " + std::to_string(step),
                        last_good);
                j_sum += j;
                ++critic_batches;
            } else {
                const float kl = kl_loss(code);
                const float recon = reconstruction_loss(xb, fake);
                float gen_term = 0.0f;
                dfake = reconstruction_loss_grad_t<float>(xb, fake);
                if (adversarial) {
                    const Eigen::MatrixXf s_fake = model.critic().forward(fake);
                    gen_term = -s_fake.mean();
                    // Critic gradients picked up here are scratch; the next
                    // critic turn zeroes them before its own update.
                    dfake += model.critic().backward(
                        Eigen::MatrixXf::Constant(1, n, -alpha * inv_n), true);
                }
                if (!std::isfinite(kl) || !std::isfinite(recon) ||
                    !std::isfinite(gen_term))
                    throw DivergenceError(
                        "loss diverged at step " + std::to_string(step) + " (kl=" +
                            std::to_string(kl) + ", recon=" + std::to_string(recon) +
                            ")",
                        last_good);

                nn::ParamSet<float> ps_g = model.generator_params();
                ps_g.zero_grads();
                const Eigen::MatrixXf din = model.decoder().backward(dfake, true);
                model.singer_embedding().accumulate_grad(
                    sids, din.middleRows(latent, model_config.singer_dim));
                kl_loss_grad_t<float>(code, dmean, dlog_var);
                dmean += din.topRows(latent);
                // z = mean + exp(lv/2) * noise
                dlog_var += 0.5f * din.topRows(latent)
                                       .cwiseProduct(noise)
                                       .cwiseProduct(
                                           (code.log_var * 0.5f).array().exp().matrix());
                model.encoder().backward(dmean, dlog_var, false);
                opt_gen.step(ps_g);

                kl_sum += kl;
                recon_sum += recon;
                ++gen_batches;
            }
            ++step;
        }

        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        EpochLog log;
        log.epoch = epoch;
        log.total_epochs = config.total_epochs;
        log.adversarial = adversarial;
        log.kl = gen_batches ? kl_sum / static_cast<double>(gen_batches) : 0.0;
        log.reconstruction =
            gen_batches ? recon_sum / static_cast<double>(gen_batches) : 0.0;
        log.j_wgan = critic_batches ? j_sum / static_cast<double>(critic_batches) : 0.0;
        log.seconds = seconds;
        log.step = step;
        if (hooks.on_epoch) hooks.on_epoch(log, model);

        last_good = make_checkpoint(model, data, config, step);
        if (hooks.on_checkpoint && config.checkpoint_every_epochs > 0 &&
            epoch % config.checkpoint_every_epochs == 0 &&
            epoch != config.total_epochs)
            hooks.on_checkpoint(*last_good, epoch);
    }
    return std::move(*last_good);
}

} // namespace svc
