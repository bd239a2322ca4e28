#pragma once

#include "svc/checkpoint.hpp"
#include "svc/feature_track.hpp"
#include "svc/model.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace svc {

struct TrainingConfig {
    double alpha = 50.0;          // weight of the adversarial term
    int total_epochs = 60;
    int vae_warmup_epochs = 15;   // epochs before the critic joins
    double learning_rate = 1e-4;
    double rmsprop_decay = 0.9;
    double rmsprop_epsilon = 1e-8;
    int batch_size = 256;
    int critic_steps_per_gen_step = 5;
    double weight_clip = 0.01;    // critic weights clamped to +-this after each step
    int checkpoint_every_epochs = 5;  // 0 = only the final checkpoint
    std::uint64_t seed = 0;

    void validate() const;
};

// Everything train() consumes: normalized utterances with singer labels,
// plus the corpus-level statistics that get frozen into the checkpoint.
struct TrainingData {
    struct Utterance {
        NormalizedTrack features;
        int singer_id = -1;
    };
    std::vector<Utterance> utterances;
    CorpusScaler scaler;
    std::map<int, F0Stats> f0_stats;    // per singer, for pitch mapping later
    std::map<std::string, int> roster;  // singer name -> index (may be empty)
    std::uint32_t sample_rate_hz = 16000;
    std::uint32_t frame_shift_us = 5000;
};

struct EpochLog {
    int epoch = 0;
    int total_epochs = 0;
    bool adversarial = false;  // false during VAE warm-up
    double kl = 0.0;
    double reconstruction = 0.0;
    double j_wgan = 0.0;       // mean critic objective over critic steps; 0 in warm-up
    double seconds = 0.0;
    std::int64_t step = 0;     // optimizer steps so far
};

// Optional instrumentation. on_epoch also receives the live model so tests
// can inspect parameters mid-run; treat it as read-only.
struct TrainHooks {
    std::function<void(const EpochLog&, VawGanModel&)> on_epoch;
    std::function<void(ModelCheckpoint&, int epoch)> on_checkpoint;
};

// Raised when a loss turns NaN/Inf. Carries the checkpoint snapshotted at
// the end of the last completed epoch (null when the first epoch diverges).
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::shared_ptr<ModelCheckpoint> last_good)
        : std::runtime_error(what), last_good_(std::move(last_good)) {}

    const std::shared_ptr<ModelCheckpoint>& last_good() const { return last_good_; }

private:
    std::shared_ptr<ModelCheckpoint> last_good_;
};

// Two-phase training: VAE warm-up (KL + reconstruction only, critic frozen),
// then adversarial epochs interleaving critic_steps_per_gen_step critic
// batches with one generator batch. Deterministic for a fixed seed.
//
// Throws InsufficientDataError (no frames, or fewer than two distinct
// singers), CompatibilityError (singer id outside the model's table),
// ConfigError, or DivergenceError.
ModelCheckpoint train(const TrainingData& data, const ModelConfig& model_config,
                      const TrainingConfig& config, const TrainHooks& hooks = {});

} // namespace svc
