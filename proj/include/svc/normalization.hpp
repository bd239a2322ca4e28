#pragma once

#include "svc/feature_track.hpp"

#include <vector>

namespace svc {

// Floor added inside the log when normalizing spectra, and reused when
// flooring spectra for cepstral analysis.
inline constexpr double kLogSpectrumFloor = 1e-10;

// Per-frame energy normalization and F0 conditioning scale.
//
// For each frame: energy = sum(sp), log_sp_norm = log(sp/energy + floor).
// Voiced F0 maps through log Hz onto [-1, 1] using the scaler's corpus range
// (values outside the range are clamped); unvoiced frames get 0.0 and a
// cleared voicing flag.
//
// Throws InvalidTrackError if the track is malformed, DegenerateDataError if
// any frame has zero spectral energy, ConfigError if the scaler range is
// empty (min >= max).
NormalizedTrack normalize_track(const FeatureTrack& track, const CorpusScaler& scaler);

// Inverse of the spectral half of normalize_track: sp = (exp(log_sp_norm) -
// floor) * energy, clamped at 0. F0/ap are not recoverable here; callers
// carry them separately.
Eigen::MatrixXf denormalize_track(const Eigen::MatrixXd& log_sp_norm,
                                  const Eigen::VectorXd& energy);

// Mean and population std of log F0 over voiced frames of `tracks`.
// Throws InsufficientDataError when there are no voiced frames at all,
// DegenerateDataError when every voiced frame has the same F0 (std = 0,
// useless for transforming pitch).
F0Stats compute_f0_stats(const std::vector<FeatureTrack>& tracks);
F0Stats compute_f0_stats(const std::vector<const FeatureTrack*>& tracks);
F0Stats compute_f0_stats(const FeatureTrack& track);

// Voiced log-F0 min/max over an entire corpus. Same error conditions as
// compute_f0_stats, plus DegenerateDataError when min == max.
CorpusScaler compute_corpus_scaler(const std::vector<FeatureTrack>& tracks);

// Log-Gaussian pitch mapping: f_out = exp((log f - mean_s) / std_s * std_t
// + mean_t) on voiced frames; unvoiced frames stay 0. Throws
// DegenerateDataError when source std is zero or either stats object has no
// voiced frames behind it.
std::vector<float> lg_transform_f0(const std::vector<float>& f0,
                                   const F0Stats& source,
                                   const F0Stats& target);

// Scale one voiced F0 value (Hz) into [-1, 1] conditioning space, clamping
// to the scaler range. Precondition: f0_hz > 0 and scaler range non-empty.
double scale_f0_value(double f0_hz, const CorpusScaler& scaler);

} // namespace svc
