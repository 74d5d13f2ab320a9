#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace finequest {

/// Half-open frame interval [start, end).
struct FrameInterval {
    std::size_t start = 0;
    std::size_t end = 0;

    [[nodiscard]] std::size_t length() const noexcept { return end - start; }
    bool operator==(const FrameInterval &) const = default;
};

struct ClipShape {
    std::size_t frames = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 0;

    [[nodiscard]] std::size_t frame_size() const noexcept { return height * width * channels; }
    [[nodiscard]] std::size_t size() const noexcept { return frames * frame_size(); }
    bool operator==(const ClipShape &) const = default;
};

/// Dense frame sequence, frames x height x width x channels, values in [0, 1].
class ClipTensor {
  public:
    ClipTensor() = default;
    ClipTensor(ClipShape shape, double fps);
    ClipTensor(ClipShape shape, double fps, std::vector<float> values);

    [[nodiscard]] const ClipShape &shape() const noexcept { return shape_; }
    [[nodiscard]] std::size_t frame_count() const noexcept { return shape_.frames; }
    [[nodiscard]] double fps() const noexcept { return fps_; }
    [[nodiscard]] double duration_seconds() const noexcept;

    [[nodiscard]] std::span<const float> values() const noexcept { return values_; }
    [[nodiscard]] std::span<float> values() noexcept { return values_; }
    [[nodiscard]] std::span<const float> frame(std::size_t index) const;
    [[nodiscard]] std::span<float> frame(std::size_t index);

    /// Copies frames [interval.start, interval.end).
    [[nodiscard]] ClipTensor slice(FrameInterval interval) const;

    /// Stable content hash over shape, fps and pixel bytes.
    [[nodiscard]] std::string content_hash() const;

    bool operator==(const ClipTensor &) const = default;

  private:
    ClipShape shape_{};
    double fps_ = 25.0;
    std::vector<float> values_;
};

/// Binary ".fqclip" encoding: "FQCL", u32 version, u32 frames/height/width/channels,
/// f64 fps, then float32 values, all little-endian.
std::vector<std::byte> encode_clip(const ClipTensor &clip);
ClipTensor decode_clip(std::span<const std::byte> bytes);

ClipTensor load_clip_file(const std::string &path);
void save_clip_file(const ClipTensor &clip, const std::string &path);

/// Parameters for procedurally generated clips.
///
/// Patterns:
///   static  - every frame identical
///   ramp    - frame t has uniform value t / (frames - 1)
///   noise   - independent uniform pixels per frame
///   phases  - alternating motion (fresh noise every frame) and pause (frozen frame)
///             phases of `motion_len` and `pause_len` frames
struct SyntheticClipSpec {
    std::string pattern = "phases";
    std::size_t frames = 120;
    std::size_t height = 8;
    std::size_t width = 8;
    std::size_t channels = 3;
    double fps = 25.0;
    std::size_t motion_len = 20;
    std::size_t pause_len = 10;
    std::uint64_t seed = 0;
};

ClipTensor make_synthetic_clip(const SyntheticClipSpec &spec);

/// Parses "synthetic:<pattern>[?key=value&...]" into a spec.
SyntheticClipSpec parse_synthetic_ref(const std::string &ref);
bool is_synthetic_ref(const std::string &ref);

/// Resolves a video reference: "synthetic:..." or a path to an .fqclip file.
ClipTensor load_video(const std::string &ref);

}  // namespace finequest
