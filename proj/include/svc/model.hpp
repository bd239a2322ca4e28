#pragma once

#include "svc/feature_track.hpp"
#include "svc/nn/nets.hpp"

#include <cstdint>
#include <vector>

namespace svc {

using LatentCode = nn::LatentCodeT<float>;

// Model hyperparameters that shape the networks. Frozen into checkpoints;
// a loaded checkpoint must be used with exactly this configuration.
struct ModelConfig {
    int n_singers = 0;
    int latent_dim = 128;
    int singer_dim = 10;
    int sp_dim = kSpectrumBins;
    bool condition_on_f0 = true;

    int cond_dim() const { return singer_dim + (condition_on_f0 ? 1 : 0); }

    // Throws ConfigError on out-of-range values.
    void validate() const;

    bool operator==(const ModelConfig&) const = default;
};

// Encoder + conditional decoder + critic + singer table, with float weights.
// Forward passes cache activations for backprop, so the object is stateful
// and non-const during inference; copy it when concurrent use is needed.
class VawGanModel {
public:
    explicit VawGanModel(const ModelConfig& config);

    const ModelConfig& config() const { return config_; }

    // Gaussian(0, 0.02) weights, zero biases, in deterministic order.
    void init_params(nn::Rng& rng);

    // Log-spectrum frames (sp_dim x B) -> posterior mean/log-variance.
    LatentCode encode(const Eigen::MatrixXf& frames);

    // Latent (latent_dim x B) + one singer + per-frame scaled F0 -> frames.
    // f0_scaled must hold B values in [-1, 1] (ignored when the model is not
    // F0-conditioned; pass an empty vector then).
    Eigen::MatrixXf decode(const Eigen::MatrixXf& z, int singer,
                           const Eigen::VectorXf& f0_scaled);

    // Same, with one singer id per column (training mixes singers per batch).
    Eigen::MatrixXf decode_frames(const Eigen::MatrixXf& z,
                                  const std::vector<int>& singer_ids,
                                  const Eigen::VectorXf& f0_scaled);

    // Critic scores, one per frame.
    Eigen::VectorXf discriminate(const Eigen::MatrixXf& frames);

    // Assemble [z; embedding; f0] decoder input. Exposed for the training
    // loop, which needs to route gradients back through the pieces.
    Eigen::MatrixXf stack_decoder_input(const Eigen::MatrixXf& z,
                                        const std::vector<int>& singer_ids,
                                        const Eigen::VectorXf& f0_scaled) const;

    nn::Encoder<float>& encoder() { return encoder_; }
    nn::Decoder<float>& decoder() { return decoder_; }
    nn::Critic<float>& critic() { return critic_; }
    nn::Embedding<float>& singer_embedding() { return embedding_; }

    // Parameter views grouped per optimization target. Rebuilt per call;
    // do not hold across copies of the model.
    nn::ParamSet<float> generator_params();  // encoder + decoder + embeddings
    nn::ParamSet<float> critic_params();
    nn::ParamSet<float> all_params();

    std::int64_t parameter_count();

private:
    ModelConfig config_;
    nn::Encoder<float> encoder_;
    nn::Decoder<float> decoder_;
    nn::Critic<float> critic_;
    nn::Embedding<float> embedding_;
};

} // namespace svc
