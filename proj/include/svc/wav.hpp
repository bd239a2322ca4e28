#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace svc {

struct WavInfo {
    std::uint32_t sample_rate_hz = 0;
    std::uint16_t channels = 0;
    std::uint16_t bits_per_sample = 0;
    std::uint64_t n_samples = 0;  // per channel
};

// Parses the RIFF header only (chunks are skipped, not decoded). Throws
// FormatError on anything that is not a PCM WAV file.
WavInfo read_wav_info(const std::filesystem::path& path);

// Reads a mono 16-bit PCM file into [-1, 1] floats. Throws FormatError when
// the file is not mono 16-bit PCM.
std::vector<float> read_wav_mono16(const std::filesystem::path& path,
                                   WavInfo* info = nullptr);

// Writes mono 16-bit PCM; samples are clamped to [-1, 1] before quantizing.
void write_wav_mono16(const std::filesystem::path& path,
                      const std::vector<float>& samples,
                      std::uint32_t sample_rate_hz);

} // namespace svc
