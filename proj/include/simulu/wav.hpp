#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace simulu {

struct WavData {
    std::int64_t sample_rate = 0;
    std::vector<float> samples; // [-1, 1)
};

// 16-bit PCM mono only; anything else throws std::runtime_error.
WavData read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, std::span<const float> samples, std::int64_t sample_rate);

} // namespace simulu
