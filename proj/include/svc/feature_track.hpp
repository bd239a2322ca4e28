#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace svc {

// Number of spectral bins per frame for 16 kHz audio analysed with a
// 1024-point FFT: 1024/2 + 1.
inline constexpr int kSpectrumBins = 513;

// Valid F0 range for voiced frames, in Hz. 0.0 is the unvoiced marker.
inline constexpr float kMinVoicedF0Hz = 20.0f;
inline constexpr float kMaxVoicedF0Hz = 2000.0f;

// Vocoder features for one utterance. Matrices are bin-major: column t holds
// frame t, so sp(k, t) is spectral bin k of frame t.
struct FeatureTrack {
    std::uint32_t sample_rate_hz = 16000;
    std::uint32_t frame_shift_us = 5000;
    std::vector<float> f0;  // Hz; exactly 0.0 on unvoiced frames
    Eigen::MatrixXf sp;     // kSpectrumBins x n_frames, linear power, >= 0
    Eigen::MatrixXf ap;     // kSpectrumBins x n_frames, each value in [0, 1]

    // In-memory label assigned when loading a labelled corpus; -1 = unknown.
    // Not serialized: the on-disk format stores only the signal features.
    int singer_id = -1;

    Eigen::Index n_frames() const { return static_cast<Eigen::Index>(f0.size()); }

    // Throws InvalidTrackError when any invariant is broken: mismatched
    // matrix shapes, F0 outside {0} ∪ [kMin, kMax], sp < 0, ap outside [0, 1],
    // or non-finite values anywhere.
    void validate() const;
};

// FeatureTrack after per-frame energy normalization, ready for the networks.
struct NormalizedTrack {
    Eigen::MatrixXd log_sp_norm;  // kSpectrumBins x T; exp() of each column sums to ~1
    Eigen::VectorXd energy;       // T; per-frame sp sum removed during normalization
    Eigen::VectorXd f0_scaled;    // T; in [-1, 1] on voiced frames, 0.0 on unvoiced
    std::vector<std::uint8_t> voicing;  // T; 1 = voiced

    Eigen::Index n_frames() const { return energy.size(); }
};

// Log-F0 statistics of one singer, natural log of Hz over voiced frames only.
struct F0Stats {
    double mean_log_f0 = 0.0;
    double std_log_f0 = 0.0;  // population standard deviation
    std::int64_t n_voiced_frames = 0;
};

// Corpus-wide voiced log-F0 range used to scale F0 into [-1, 1] for
// conditioning. Frozen at training time and stored in the checkpoint.
struct CorpusScaler {
    double log_f0_min = 0.0;
    double log_f0_max = 0.0;
};

} // namespace svc
