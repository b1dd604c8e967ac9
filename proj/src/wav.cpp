#include "simulu/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace simulu {

namespace {

std::uint32_t le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::ofstream& out, std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
}

void put16(std::ofstream& out, std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>(v >> 8)};
    out.write(b, 2);
}

} // namespace

WavData read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
    if (bytes.size() < 12 || std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0) {
        throw std::runtime_error(path.string() + ": not a RIFF/WAVE file");
    }

    WavData wav;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const std::uint32_t size = le32(data + pos + 4);
        const std::size_t body = pos + 8;
        if (body + size > bytes.size()) {
            throw std::runtime_error(path.string() + ": truncated chunk");
        }
        if (std::memcmp(data + pos, "fmt ", 4) == 0) {
            if (size < 16) {
                throw std::runtime_error(path.string() + ": short fmt chunk");
            }
            const std::uint16_t format = le16(data + body);
            const std::uint16_t channels = le16(data + body + 2);
            const std::uint16_t bits = le16(data + body + 14);
            if (format != 1 || bits != 16) {
                throw std::runtime_error(path.string() + ": only 16-bit PCM WAV is supported");
            }
            if (channels != 1) {
                throw std::runtime_error(path.string() + ": only mono WAV is supported (got " +
                                         std::to_string(channels) + " channels)");
            }
            wav.sample_rate = le32(data + body + 4);
            have_fmt = true;
        } else if (std::memcmp(data + pos, "data", 4) == 0) {
            if (!have_fmt) {
                throw std::runtime_error(path.string() + ": data chunk before fmt chunk");
            }
            wav.samples.resize(size / 2);
            for (std::size_t i = 0; i < wav.samples.size(); ++i) {
                const auto v = static_cast<std::int16_t>(le16(data + body + 2 * i));
                wav.samples[i] = static_cast<float>(v) / 32768.0f;
            }
            return wav;
        }
        pos = body + size + (size & 1);
    }
    throw std::runtime_error(path.string() + ": no data chunk");
}

void write_wav(const std::filesystem::path& path, std::span<const float> samples, std::int64_t sample_rate) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
    out.write("RIFF", 4);
    put32(out, 36 + data_bytes);
    out.write("WAVEfmt ", 8);
    put32(out, 16);
    put16(out, 1);
    put16(out, 1);
    put32(out, static_cast<std::uint32_t>(sample_rate));
    put32(out, static_cast<std::uint32_t>(sample_rate * 2));
    put16(out, 2);
    put16(out, 16);
    out.write("data", 4);
    put32(out, data_bytes);
    for (float s : samples) {
        const long q = std::clamp<long>(std::lround(static_cast<double>(s) * 32768.0), -32768, 32767);
        put16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
    }
}

} // namespace simulu
