#include "svc/wav.hpp"

#include "svc/errors.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "WAV I/O assumes a little-endian host");

namespace svc {

namespace {

struct ChunkScan {
    WavInfo info;
    std::uint64_t data_offset = 0;
    std::uint64_t data_bytes = 0;
};

ChunkScan scan_wav(const std::filesystem::path& path, std::ifstream& in) {
    char tag[4];
    std::uint32_t riff_size = 0;
    if (!in.read(tag, 4) || std::memcmp(tag, "RIFF", 4) != 0)
        throw FormatError(path.string() + ": not a RIFF file");
    in.read(reinterpret_cast<char*>(&riff_size), 4);
    if (!in.read(tag, 4) || std::memcmp(tag, "WAVE", 4) != 0)
        throw FormatError(path.string() + ": not a WAVE file");

    ChunkScan scan;
    bool have_fmt = false;
    while (in.read(tag, 4)) {
        std::uint32_t size = 0;
        if (!in.read(reinterpret_cast<char*>(&size), 4))
            throw FormatError(path.string() + ": truncated chunk header");
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            struct {
                std::uint16_t format, channels;
                std::uint32_t rate, byte_rate;
                std::uint16_t block_align, bits;
            } fmt;
            if (size < sizeof(fmt) || !in.read(reinterpret_cast<char*>(&fmt), sizeof(fmt)))
                throw FormatError(path.string() + ": truncated fmt chunk");
            if (fmt.format != 1)
                throw FormatError(path.string() + ": format tag " +
                                  std::to_string(fmt.format) + ", only PCM supported");
            scan.info.sample_rate_hz = fmt.rate;
            scan.info.channels = fmt.channels;
            scan.info.bits_per_sample = fmt.bits;
            in.seekg(size - sizeof(fmt) + (size & 1), std::ios::cur);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            scan.data_offset = static_cast<std::uint64_t>(in.tellg());
            scan.data_bytes = size;
            in.seekg(size + (size & 1), std::ios::cur);
        } else {
            in.seekg(size + (size & 1), std::ios::cur);
        }
    }
    in.clear();
    if (!have_fmt || scan.data_offset == 0)
        throw FormatError(path.string() + ": missing fmt or data chunk");
    if (scan.info.channels == 0 || scan.info.bits_per_sample == 0 ||
        scan.info.sample_rate_hz == 0)
        throw FormatError(path.string() + ": zero fields in fmt chunk");
    const std::uint32_t frame_bytes =
        scan.info.channels * (scan.info.bits_per_sample / 8u);
    scan.info.n_samples = frame_bytes ? scan.data_bytes / frame_bytes : 0;
    return scan;
}

} // namespace

WavInfo read_wav_info(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(path.string() + ": cannot open for reading");
    return scan_wav(path, in).info;
}

std::vector<float> read_wav_mono16(const std::filesystem::path& path, WavInfo* info) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError(path.string() + ": cannot open for reading");
    const ChunkScan scan = scan_wav(path, in);
    if (scan.info.channels != 1 || scan.info.bits_per_sample != 16)
        throw FormatError(path.string() + ": need mono 16-bit PCM, got " +
                          std::to_string(scan.info.channels) + " channel(s) at " +
                          std::to_string(scan.info.bits_per_sample) + " bits");
    std::vector<std::int16_t> raw(scan.info.n_samples);
    in.seekg(static_cast<std::streamoff>(scan.data_offset));
    if (!in.read(reinterpret_cast<char*>(raw.data()),
                 static_cast<std::streamsize>(raw.size() * 2)))
        throw FormatError(path.string() + ": truncated sample data");
    std::vector<float> samples(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i)
        samples[i] = static_cast<float>(raw[i]) / 32768.0f;
    if (info) *info = scan.info;
    return samples;
}

void write_wav_mono16(const std::filesystem::path& path,
                      const std::vector<float>& samples,
                      std::uint32_t sample_rate_hz) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw WriteError(path.string() + ": cannot open for writing");
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    const std::uint32_t riff_size = 36 + data_bytes;
    out.write("RIFF", 4);
    out.write(reinterpret_cast<const char*>(&riff_size), 4);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    const std::uint32_t fmt_size = 16;
    out.write(reinterpret_cast<const char*>(&fmt_size), 4);
    const std::uint16_t format = 1, channels = 1, bits = 16;
    const std::uint32_t byte_rate = sample_rate_hz * 2;
    const std::uint16_t block_align = 2;
    out.write(reinterpret_cast<const char*>(&format), 2);
    out.write(reinterpret_cast<const char*>(&channels), 2);
    out.write(reinterpret_cast<const char*>(&sample_rate_hz), 4);
    out.write(reinterpret_cast<const char*>(&byte_rate), 4);
    out.write(reinterpret_cast<const char*>(&block_align), 2);
    out.write(reinterpret_cast<const char*>(&bits), 2);
    out.write("data", 4);
    out.write(reinterpret_cast<const char*>(&data_bytes), 4);
    for (const float s : samples) {
        const float c = std::clamp(s, -1.0f, 1.0f);
        const auto q = static_cast<std::int16_t>(std::lrintf(c * 32767.0f));
        out.write(reinterpret_cast<const char*>(&q), 2);
    }
    if (!out)
        throw WriteError(path.string() + ": write failed");
}

} // namespace svc
