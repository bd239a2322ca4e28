#include "svc/feature_io.hpp"

#include "svc/errors.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "feature container I/O assumes a little-endian host");

namespace svc {

namespace {

constexpr char kMagic[4] = {'S', 'V', 'C', 'F'};
constexpr std::uint32_t kVersion = 1;

struct Header {
    std::uint32_t version;
    std::uint32_t sample_rate_hz;
    std::uint32_t frame_shift_us;
    std::uint32_t n_frames;
    std::uint32_t sp_dim;
    std::uint32_t ap_dim;
};

[[noreturn]] void fail_format(const std::filesystem::path& path, const std::string& what) {
    throw FormatError(path.string() + ": " + what);
}

[[noreturn]] void fail_corrupt(const std::filesystem::path& path, const std::string& what) {
    throw CorruptionError(path.string() + ": " + what);
}

} // namespace

void FeatureTrack::validate() const {
    const Eigen::Index t = n_frames();
    if (sp.cols() != t || ap.cols() != t)
        throw InvalidTrackError("track shape mismatch: " + std::to_string(f0.size()) +
                                " f0 frames vs sp cols " + std::to_string(sp.cols()) +
                                ", ap cols " + std::to_string(ap.cols()));
    if ((t > 0 && sp.rows() != kSpectrumBins) || (t > 0 && ap.rows() != kSpectrumBins))
        throw InvalidTrackError("track must have " + std::to_string(kSpectrumBins) +
                                " spectral bins, got sp rows " + std::to_string(sp.rows()) +
                                ", ap rows " + std::to_string(ap.rows()));
    if (sample_rate_hz == 0 || frame_shift_us == 0)
        throw InvalidTrackError("sample_rate_hz and frame_shift_us must be positive");
    for (Eigen::Index i = 0; i < t; ++i) {
        const float v = f0[static_cast<std::size_t>(i)];
        if (!std::isfinite(v) || (v != 0.0f && (v < kMinVoicedF0Hz || v > kMaxVoicedF0Hz)))
            throw InvalidTrackError("f0[" + std::to_string(i) + "] = " + std::to_string(v) +
                                    " outside {0} or [" + std::to_string(kMinVoicedF0Hz) +
                                    ", " + std::to_string(kMaxVoicedF0Hz) + "] Hz");
    }
    if (t > 0) {
        if (!sp.allFinite() || sp.minCoeff() < 0.0f)
            throw InvalidTrackError("sp must be finite and non-negative");
        if (!ap.allFinite() || ap.minCoeff() < 0.0f || ap.maxCoeff() > 1.0f)
            throw InvalidTrackError("ap must be finite and within [0, 1]");
    }
}

FeatureTrack read_feature_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(path.string() + ": cannot open for reading");

    char magic[4];
    if (!in.read(magic, 4))
        fail_format(path, "file shorter than magic");
    if (std::memcmp(magic, kMagic, 4) != 0)
        fail_format(path, "bad magic, not a feature file");

    Header h;
    if (!in.read(reinterpret_cast<char*>(&h), sizeof(h)))
        fail_format(path, "truncated header");
    if (h.version != kVersion)
        fail_format(path, "unsupported version " + std::to_string(h.version));
    if (h.sp_dim != kSpectrumBins || h.ap_dim != kSpectrumBins)
        fail_format(path, "unexpected dims sp=" + std::to_string(h.sp_dim) +
                          " ap=" + std::to_string(h.ap_dim));
    if (h.sample_rate_hz == 0 || h.frame_shift_us == 0)
        fail_corrupt(path, "zero sample rate or frame shift");

    const std::size_t row = 1 + h.sp_dim + h.ap_dim;
    FeatureTrack track;
    track.sample_rate_hz = h.sample_rate_hz;
    track.frame_shift_us = h.frame_shift_us;
    track.f0.resize(h.n_frames);
    track.sp.resize(kSpectrumBins, h.n_frames);
    track.ap.resize(kSpectrumBins, h.n_frames);

    std::vector<float> frame(row);
    for (std::uint32_t t = 0; t < h.n_frames; ++t) {
        if (!in.read(reinterpret_cast<char*>(frame.data()),
                     static_cast<std::streamsize>(row * sizeof(float))))
            fail_corrupt(path, "truncated at frame " + std::to_string(t) + " of " +
                               std::to_string(h.n_frames));
        track.f0[t] = frame[0];
        std::memcpy(track.sp.col(t).data(), frame.data() + 1, h.sp_dim * sizeof(float));
        std::memcpy(track.ap.col(t).data(), frame.data() + 1 + h.sp_dim,
                    h.ap_dim * sizeof(float));
    }
    if (in.peek() != std::char_traits<char>::eof())
        fail_corrupt(path, "trailing bytes after " + std::to_string(h.n_frames) + " frames");

    try {
        track.validate();
    } catch (const InvalidTrackError& e) {
        fail_corrupt(path, e.what());
    }
    return track;
}

void write_feature_file(const std::filesystem::path& path, const FeatureTrack& track) {
    track.validate();

    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw WriteError(tmp.string() + ": cannot open for writing");

        out.write(kMagic, 4);
        const Header h{kVersion, track.sample_rate_hz, track.frame_shift_us,
                       static_cast<std::uint32_t>(track.n_frames()),
                       kSpectrumBins, kSpectrumBins};
        out.write(reinterpret_cast<const char*>(&h), sizeof(h));

        std::vector<float> frame(1 + 2 * kSpectrumBins);
        for (Eigen::Index t = 0; t < track.n_frames(); ++t) {
            frame[0] = track.f0[static_cast<std::size_t>(t)];
            std::memcpy(frame.data() + 1, track.sp.col(t).data(),
                        kSpectrumBins * sizeof(float));
            std::memcpy(frame.data() + 1 + kSpectrumBins, track.ap.col(t).data(),
                        kSpectrumBins * sizeof(float));
            out.write(reinterpret_cast<const char*>(frame.data()),
                      static_cast<std::streamsize>(frame.size() * sizeof(float)));
        }
        if (!out)
            throw WriteError(tmp.string() + ": write failed");
    }

    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw WriteError(path.string() + ": rename failed: " + ec.message());
    }
}

} // namespace svc
