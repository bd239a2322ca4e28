#pragma once

#include "svc/feature_track.hpp"

#include <string>
#include <utility>
#include <vector>

namespace svc {

// Default frequency-warping coefficient for 16 kHz audio and the cepstral
// order used for distortion metrics.
inline constexpr double kMcepWarp = 0.42;
inline constexpr int kMcepOrder = 24;

// Warped (mel) cepstra of one utterance; coeffs is (order+1) x T with c0 in
// row 0. Distortion metrics use rows 1..order only — c0 is an energy term.
struct McepSequence {
    Eigen::MatrixXd coeffs;
    std::string id;

    Eigen::Index order() const { return coeffs.rows() - 1; }
    Eigen::Index n_frames() const { return coeffs.cols(); }
};

// Spectral envelope -> warped cepstrum, per frame:
//  1. floor the power spectrum and take its log,
//  2. inverse cosine transform over the mirrored 2*(bins-1) point spectrum
//     to a full linear-frequency cepstrum,
//  3. recursively re-expand on the allpass-warped frequency axis, keeping
//     coefficients 0..order.
// Throws ShapeError (wrong bin count), ConfigError (order/warp out of
// range), DegenerateDataError (non-finite spectrum values).
McepSequence sp_to_mcep(const Eigen::MatrixXf& sp, int order = kMcepOrder,
                        double warp = kMcepWarp);

// Dynamic time warping over Euclidean distance of coefficients 1..order.
// Steps (1,0), (0,1), (1,1); endpoints pinned to the first and last frames
// of both sequences. Returns the monotone aligned index pairs. Throws
// ShapeError on empty sequences or mismatched orders.
std::vector<std::pair<Eigen::Index, Eigen::Index>> dtw_align(
    const McepSequence& a, const McepSequence& b);

struct MetricReport {
    double mcd_db = 0.0;
    Eigen::Index aligned_frames = 0;  // DTW path length
    std::string converted_id;
    std::string reference_id;
};

// Mean mel-cepstral distortion along the DTW path:
//   (10 / ln 10) * mean_path sqrt(2 * sum_{d=1..order} (ca_d - cb_d)^2).
MetricReport mcd(const McepSequence& converted, const McepSequence& reference);

// Distortion between two tracks with no conversion applied — the baseline a
// useful conversion should undercut.
MetricReport zero_effort_mcd(const FeatureTrack& source, const FeatureTrack& target);

} // namespace svc
