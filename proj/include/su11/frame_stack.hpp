#pragma once

// FrameStack container and its binary file format.
//
// Layout (little-endian, no padding, no compression):
//   char[8]  magic "SU11FRM1"
//   u32      rows, cols, n_frames
//   u8       bit_depth (8 or 16)
//   f64      fps
//   f64[4]   calibration coefficients
//   u32[4]   stripe bounds (H begin, H end, V begin, V end)
//   u64[2]   seeds (drift, noise)
//   u8[32]   config digest (SHA-256)
//   frames   n_frames * rows * cols samples, row-major, u8 or u16

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace su11 {

using Frame = Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Half-open row range [begin, end).
struct StripeBounds {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;

    std::uint32_t size() const { return end > begin ? end - begin : 0; }
    bool operator==(const StripeBounds&) const = default;
};

using Digest = std::array<std::uint8_t, 32>;

struct FrameStackHeader {
    std::uint32_t rows = 0;
    std::uint32_t cols = 0;
    std::uint32_t n_frames = 0;
    std::uint8_t bit_depth = 16;
    double fps = 50.0;
    std::array<double, 4> calibration{};
    StripeBounds stripe_h;
    StripeBounds stripe_v;
    std::array<std::uint64_t, 2> seeds{};
    Digest digest{};

    bool operator==(const FrameStackHeader&) const = default;
};

inline constexpr std::size_t kFrameStackHeaderBytes = 8 + 3 * 4 + 1 + 8 + 4 * 8 + 4 * 4 + 2 * 8 + 32;

struct FrameStack {
    FrameStackHeader header;
    std::vector<Frame> frames;
    // Not serialized: set when more than 1% of any frame's pixels clipped.
    bool saturation_warning = false;
};

class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

std::vector<std::uint8_t> encode_frame_stack(const FrameStack& stack);
FrameStack decode_frame_stack(const std::vector<std::uint8_t>& bytes);

/// Atomic write: temp file in the same directory, then rename.
void write_frame_stack(const FrameStack& stack, const std::filesystem::path& path);
FrameStack read_frame_stack(const std::filesystem::path& path);

void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace su11
