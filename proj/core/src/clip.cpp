#include "finequest/clip.hpp"

#include "finequest/errors.hpp"
#include "finequest/util.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <random>

namespace finequest {

static_assert(std::endian::native == std::endian::little, "fqclip I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 4> kMagic{'F', 'Q', 'C', 'L'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderSize = 4 + 4 * 5 + 8;

template <typename T>
void put(std::vector<std::byte> &out, T value) {
    const auto *p = reinterpret_cast<const std::byte *>(&value);
    out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(std::span<const std::byte> bytes, std::size_t offset) {
    T value;
    std::memcpy(&value, bytes.data() + offset, sizeof(T));
    return value;
}

}  // namespace

ClipTensor::ClipTensor(ClipShape shape, double fps) : ClipTensor(shape, fps, std::vector<float>(shape.size(), 0.0F)) {}

ClipTensor::ClipTensor(ClipShape shape, double fps, std::vector<float> values)
    : shape_(shape), fps_(fps), values_(std::move(values)) {
    if (values_.size() != shape_.size()) {
        throw Error(Errc::LengthMismatch, "clip data has " + std::to_string(values_.size()) + " values, shape needs " +
                                              std::to_string(shape_.size()));
    }
    if (!(fps_ > 0.0)) throw Error(Errc::InvalidArgument, "fps must be positive");
}

double ClipTensor::duration_seconds() const noexcept { return static_cast<double>(shape_.frames) / fps_; }

std::span<const float> ClipTensor::frame(std::size_t index) const {
    if (index >= shape_.frames) throw Error(Errc::InvalidArgument, "frame index out of range");
    return std::span<const float>(values_).subspan(index * shape_.frame_size(), shape_.frame_size());
}

std::span<float> ClipTensor::frame(std::size_t index) {
    if (index >= shape_.frames) throw Error(Errc::InvalidArgument, "frame index out of range");
    return std::span<float>(values_).subspan(index * shape_.frame_size(), shape_.frame_size());
}

ClipTensor ClipTensor::slice(FrameInterval interval) const {
    if (interval.start >= interval.end || interval.end > shape_.frames) {
        throw Error(Errc::InvalidArgument, "slice [" + std::to_string(interval.start) + ", " +
                                               std::to_string(interval.end) + ") outside clip of " +
                                               std::to_string(shape_.frames) + " frames");
    }
    ClipShape shape = shape_;
    shape.frames = interval.length();
    const auto first = values_.begin() + static_cast<std::ptrdiff_t>(interval.start * shape_.frame_size());
    const auto last = values_.begin() + static_cast<std::ptrdiff_t>(interval.end * shape_.frame_size());
    return ClipTensor(shape, fps_, std::vector<float>(first, last));
}

std::string ClipTensor::content_hash() const { return util::sha256_hex(std::span<const std::byte>(encode_clip(*this))); }

std::vector<std::byte> encode_clip(const ClipTensor &clip) {
    std::vector<std::byte> out;
    out.reserve(kHeaderSize + clip.values().size() * sizeof(float));
    for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
    put(out, kVersion);
    const auto &s = clip.shape();
    put(out, static_cast<std::uint32_t>(s.frames));
    put(out, static_cast<std::uint32_t>(s.height));
    put(out, static_cast<std::uint32_t>(s.width));
    put(out, static_cast<std::uint32_t>(s.channels));
    put(out, clip.fps());
    const auto *p = reinterpret_cast<const std::byte *>(clip.values().data());
    out.insert(out.end(), p, p + clip.values().size() * sizeof(float));
    return out;
}

ClipTensor decode_clip(std::span<const std::byte> bytes) {
    if (bytes.size() < kHeaderSize) throw Error(Errc::ParseError, "clip payload shorter than header");
    if (std::memcmp(bytes.data(), kMagic.data(), kMagic.size()) != 0) throw Error(Errc::ParseError, "bad clip magic");
    if (get<std::uint32_t>(bytes, 4) != kVersion) throw Error(Errc::ParseError, "unsupported clip version");
    ClipShape shape{get<std::uint32_t>(bytes, 8), get<std::uint32_t>(bytes, 12), get<std::uint32_t>(bytes, 16),
                    get<std::uint32_t>(bytes, 20)};
    const double fps = get<double>(bytes, 24);
    if (bytes.size() != kHeaderSize + shape.size() * sizeof(float)) {
        throw Error(Errc::ParseError, "clip payload size does not match its header");
    }
    std::vector<float> values(shape.size());
    std::memcpy(values.data(), bytes.data() + kHeaderSize, values.size() * sizeof(float));
    return ClipTensor(shape, fps, std::move(values));
}

ClipTensor load_clip_file(const std::string &path) {
    const std::string raw = util::read_file(path);
    return decode_clip(std::as_bytes(std::span(raw.data(), raw.size())));
}

void save_clip_file(const ClipTensor &clip, const std::string &path) {
    const auto bytes = encode_clip(clip);
    util::write_file(path, std::string_view(reinterpret_cast<const char *>(bytes.data()), bytes.size()));
}

ClipTensor make_synthetic_clip(const SyntheticClipSpec &spec) {
    if (spec.frames == 0 || spec.height == 0 || spec.width == 0 || spec.channels == 0) {
        throw Error(Errc::InvalidArgument, "synthetic clip dimensions must be positive");
    }
    ClipTensor clip({spec.frames, spec.height, spec.width, spec.channels}, spec.fps);
    std::mt19937_64 rng(spec.seed);
    auto fill_noise = [&](std::span<float> frame) {
        for (auto &v : frame) v = static_cast<float>(util::bits_to_unit(rng()));
    };

    if (spec.pattern == "static") {
        fill_noise(clip.frame(0));
        for (std::size_t t = 1; t < spec.frames; ++t) std::ranges::copy(clip.frame(0), clip.frame(t).begin());
    } else if (spec.pattern == "ramp") {
        for (std::size_t t = 0; t < spec.frames; ++t) {
            const float v = spec.frames > 1 ? static_cast<float>(t) / static_cast<float>(spec.frames - 1) : 0.0F;
            std::ranges::fill(clip.frame(t), v);
        }
    } else if (spec.pattern == "noise") {
        for (std::size_t t = 0; t < spec.frames; ++t) fill_noise(clip.frame(t));
    } else if (spec.pattern == "phases") {
        if (spec.motion_len == 0) throw Error(Errc::InvalidArgument, "phases pattern needs motion_len > 0");
        const std::size_t period = spec.motion_len + spec.pause_len;
        for (std::size_t t = 0; t < spec.frames; ++t) {
            if (t == 0 || (t % period) < spec.motion_len) {
                fill_noise(clip.frame(t));
            } else {
                std::ranges::copy(clip.frame(t - 1), clip.frame(t).begin());
            }
        }
    } else {
        throw Error(Errc::InvalidArgument, "unknown synthetic pattern '" + spec.pattern + "'");
    }
    return clip;
}

bool is_synthetic_ref(const std::string &ref) { return ref.starts_with("synthetic:"); }

SyntheticClipSpec parse_synthetic_ref(const std::string &ref) {
    if (!is_synthetic_ref(ref)) throw Error(Errc::InvalidArgument, "not a synthetic ref: " + ref);
    SyntheticClipSpec spec;
    std::string_view rest = std::string_view(ref).substr(std::string_view("synthetic:").size());
    const auto q = rest.find('?');
    spec.pattern = std::string(rest.substr(0, q));
    if (spec.pattern != "static" && spec.pattern != "ramp" && spec.pattern != "noise" && spec.pattern != "phases") {
        throw Error(Errc::InvalidArgument, "unknown synthetic pattern '" + spec.pattern + "' in " + ref);
    }
    if (q == std::string_view::npos) return spec;

    auto parse_uint = [&](std::string_view key, std::string_view value) {
        std::uint64_t out = 0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
        if (ec != std::errc{} || ptr != value.data() + value.size()) {
            throw Error(Errc::ParseError, "bad value for '" + std::string(key) + "' in " + ref);
        }
        return out;
    };

    std::string_view params = rest.substr(q + 1);
    while (!params.empty()) {
        const auto amp = params.find('&');
        const std::string_view kv = params.substr(0, amp);
        params = amp == std::string_view::npos ? std::string_view{} : params.substr(amp + 1);
        const auto eq = kv.find('=');
        if (eq == std::string_view::npos) throw Error(Errc::ParseError, "malformed parameter in " + ref);
        const auto key = kv.substr(0, eq);
        const auto value = kv.substr(eq + 1);
        if (key == "frames") spec.frames = parse_uint(key, value);
        else if (key == "height") spec.height = parse_uint(key, value);
        else if (key == "width") spec.width = parse_uint(key, value);
        else if (key == "channels") spec.channels = parse_uint(key, value);
        else if (key == "motion") spec.motion_len = parse_uint(key, value);
        else if (key == "pause") spec.pause_len = parse_uint(key, value);
        else if (key == "seed") spec.seed = parse_uint(key, value);
        else if (key == "fps") spec.fps = static_cast<double>(parse_uint(key, value));
        else throw Error(Errc::ParseError, "unknown parameter '" + std::string(key) + "' in " + ref);
    }
    return spec;
}

ClipTensor load_video(const std::string &ref) {
    if (is_synthetic_ref(ref)) return make_synthetic_clip(parse_synthetic_ref(ref));
    return load_clip_file(ref);
}

}  // namespace finequest
