#include "svc/normalization.hpp"

#include "svc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace svc {

namespace {

void require_scaler(const CorpusScaler& scaler) {
    if (!(scaler.log_f0_min < scaler.log_f0_max))
        throw ConfigError("corpus F0 scaler has empty range: min " +
                          std::to_string(scaler.log_f0_min) + " >= max " +
                          std::to_string(scaler.log_f0_max));
}

} // namespace

double scale_f0_value(double f0_hz, const CorpusScaler& scaler) {
    const double x = (std::log(f0_hz) - scaler.log_f0_min) /
                     (scaler.log_f0_max - scaler.log_f0_min);
    return std::clamp(2.0 * x - 1.0, -1.0, 1.0);
}

NormalizedTrack normalize_track(const FeatureTrack& track, const CorpusScaler& scaler) {
    track.validate();
    require_scaler(scaler);

    const Eigen::Index t = track.n_frames();
    NormalizedTrack out;
    out.log_sp_norm.resize(kSpectrumBins, t);
    out.energy.resize(t);
    out.f0_scaled.resize(t);
    out.voicing.resize(static_cast<std::size_t>(t));

    for (Eigen::Index i = 0; i < t; ++i) {
        // Sum in double: per-frame energies feed a 1e-5 unit-sum invariant
        // downstream, which float accumulation over 513 bins can miss.
        const Eigen::VectorXd col = track.sp.col(i).cast<double>();
        const double energy = col.sum();
        if (!(energy > 0.0))
            throw DegenerateDataError("frame " + std::to_string(i) +
                                      " has zero spectral energy");
        out.energy[i] = energy;
        out.log_sp_norm.col(i) = ((col / energy).array() + kLogSpectrumFloor).log();

        const float f0 = track.f0[static_cast<std::size_t>(i)];
        if (f0 > 0.0f) {
            out.voicing[static_cast<std::size_t>(i)] = 1;
            out.f0_scaled[i] = scale_f0_value(f0, scaler);
        } else {
            out.voicing[static_cast<std::size_t>(i)] = 0;
            out.f0_scaled[i] = 0.0;
        }
    }
    return out;
}

Eigen::MatrixXf denormalize_track(const Eigen::MatrixXd& log_sp_norm,
                                  const Eigen::VectorXd& energy) {
    if (log_sp_norm.cols() != energy.size())
        throw ShapeError("denormalize: " + std::to_string(log_sp_norm.cols()) +
                         " spectral frames vs " + std::to_string(energy.size()) +
                         " energies");
    Eigen::MatrixXf sp(log_sp_norm.rows(), log_sp_norm.cols());
    for (Eigen::Index i = 0; i < log_sp_norm.cols(); ++i) {
        const Eigen::ArrayXd lin =
            (log_sp_norm.col(i).array().exp() - kLogSpectrumFloor) * energy[i];
        sp.col(i) = lin.max(0.0).cast<float>();
    }
    return sp;
}

namespace {

F0Stats f0_stats_over(const std::vector<const std::vector<float>*>& f0s) {
    // Two passes, mean first: naive sum-of-squares cancellation could eat
    // most of the precision when std is tiny relative to the mean.
    double sum = 0.0;
    std::int64_t n = 0;
    for (const auto* f0 : f0s)
        for (const float v : *f0)
            if (v > 0.0f) {
                sum += std::log(static_cast<double>(v));
                ++n;
            }
    if (n == 0)
        throw InsufficientDataError("no voiced frames in " +
                                    std::to_string(f0s.size()) + " track(s)");

    const double mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (const auto* f0 : f0s)
        for (const float v : *f0)
            if (v > 0.0f) {
                const double d = std::log(static_cast<double>(v)) - mean;
                var += d * d;
            }
    var /= static_cast<double>(n);

    F0Stats stats;
    stats.mean_log_f0 = mean;
    stats.std_log_f0 = std::sqrt(var);
    stats.n_voiced_frames = n;
    if (stats.std_log_f0 == 0.0)
        throw DegenerateDataError("constant F0 across all " + std::to_string(n) +
                                  " voiced frames; cannot model pitch range");
    return stats;
}

} // namespace

F0Stats compute_f0_stats(const std::vector<FeatureTrack>& tracks) {
    std::vector<const std::vector<float>*> f0s;
    f0s.reserve(tracks.size());
    for (const auto& t : tracks) f0s.push_back(&t.f0);
    return f0_stats_over(f0s);
}

F0Stats compute_f0_stats(const std::vector<const FeatureTrack*>& tracks) {
    std::vector<const std::vector<float>*> f0s;
    f0s.reserve(tracks.size());
    for (const auto* t : tracks) f0s.push_back(&t->f0);
    return f0_stats_over(f0s);
}

F0Stats compute_f0_stats(const FeatureTrack& track) {
    return f0_stats_over({&track.f0});
}

CorpusScaler compute_corpus_scaler(const std::vector<FeatureTrack>& tracks) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::int64_t n = 0;
    for (const auto& track : tracks)
        for (const float f0 : track.f0)
            if (f0 > 0.0f) {
                const double l = std::log(static_cast<double>(f0));
                lo = std::min(lo, l);
                hi = std::max(hi, l);
                ++n;
            }
    if (n == 0)
        throw InsufficientDataError("no voiced frames in " +
                                    std::to_string(tracks.size()) + " track(s)");
    if (!(lo < hi))
        throw DegenerateDataError("corpus F0 range is a single value, log f0 = " +
                                  std::to_string(lo));
    return CorpusScaler{lo, hi};
}

std::vector<float> lg_transform_f0(const std::vector<float>& f0,
                                   const F0Stats& source,
                                   const F0Stats& target) {
    if (source.n_voiced_frames <= 0 || target.n_voiced_frames <= 0)
        throw DegenerateDataError("F0 statistics computed from zero voiced frames");
    if (source.std_log_f0 <= 0.0)
        throw DegenerateDataError("source F0 std is zero; pitch mapping undefined");

    std::vector<float> out(f0.size());
    for (std::size_t i = 0; i < f0.size(); ++i) {
        if (f0[i] > 0.0f) {
            const double z =
                (std::log(static_cast<double>(f0[i])) - source.mean_log_f0) /
                source.std_log_f0;
            out[i] = static_cast<float>(
                std::exp(z * target.std_log_f0 + target.mean_log_f0));
        } else {
            out[i] = 0.0f;
        }
    }
    return out;
}

} // namespace svc
