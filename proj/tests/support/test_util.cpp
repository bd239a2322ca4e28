#include "support/test_util.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace svc::test {

TempDir::TempDir(const std::string& tag) {
    std::string tmpl =
        (std::filesystem::temp_directory_path() / (tag + ".XXXXXX")).string();
    if (!mkdtemp(tmpl.data())) {
        throw std::runtime_error("mkdtemp failed for " + tmpl);
    }
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec); // best effort
}

FeatureTrack random_track(nn::Rng& rng, Eigen::Index n_frames,
                          std::uint32_t sample_rate_hz,
                          std::uint32_t frame_shift_us) {
    FeatureTrack t;
    t.sample_rate_hz = sample_rate_hz;
    t.frame_shift_us = frame_shift_us;
    t.f0.resize(static_cast<std::size_t>(n_frames));
    t.sp.resize(kSpectrumBins, n_frames);
    t.ap.resize(kSpectrumBins, n_frames);
    for (Eigen::Index i = 0; i < n_frames; ++i) {
        bool voiced = rng.uniform() < 0.8;
        t.f0[static_cast<std::size_t>(i)] =
            voiced ? static_cast<float>(80.0 + 400.0 * rng.uniform()) : 0.0f;
        for (Eigen::Index k = 0; k < kSpectrumBins; ++k) {
            // Log-uniform magnitudes across several decades keep the
            // normalization round-trip honest.
            t.sp(k, i) = static_cast<float>(std::exp(-8.0 + 8.0 * rng.uniform()));
            t.ap(k, i) = static_cast<float>(rng.uniform());
        }
    }
    return t;
}

} // namespace svc::test
