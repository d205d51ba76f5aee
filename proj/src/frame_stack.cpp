#include "su11/frame_stack.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <system_error>

namespace su11 {

namespace {

constexpr char kMagic[8] = {'S', 'U', '1', '1', 'F', 'R', 'M', '1'};

class Writer {
public:
    explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

    template <typename T>
    void put(T value) {
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, &value, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        out_.insert(out_.end(), raw, raw + sizeof(T));
    }
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out_.insert(out_.end(), b, b + n);
    }

private:
    std::vector<std::uint8_t>& out_;
};

class Reader {
public:
    explicit Reader(const std::vector<std::uint8_t>& in) : in_(in) {}

    template <typename T>
    T get(const char* field) {
        need(sizeof(T), field);
        std::uint8_t raw[sizeof(T)];
        std::memcpy(raw, in_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(raw, raw + sizeof(T));
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, raw, sizeof(T));
        return value;
    }
    void bytes(void* p, std::size_t n, const char* field) {
        need(n, field);
        std::memcpy(p, in_.data() + pos_, n);
        pos_ += n;
    }
    void need(std::size_t n, const char* field) const {
        if (in_.size() - pos_ < n) throw FormatError(std::string("truncated frame stack while reading ") + field, pos_);
    }
    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return in_.size() - pos_; }

private:
    const std::vector<std::uint8_t>& in_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_frame_stack(const FrameStack& stack) {
    const auto& h = stack.header;
    if (h.bit_depth != 8 && h.bit_depth != 16) throw std::invalid_argument("bit_depth must be 8 or 16");
    if (stack.frames.size() != h.n_frames) throw std::invalid_argument("frame count does not match header");

    const std::size_t sample = h.bit_depth == 8 ? 1 : 2;
    std::vector<std::uint8_t> out;
    out.reserve(kFrameStackHeaderBytes + std::size_t{h.n_frames} * h.rows * h.cols * sample);
    Writer w(out);
    w.bytes(kMagic, sizeof(kMagic));
    w.put(h.rows);
    w.put(h.cols);
    w.put(h.n_frames);
    w.put(h.bit_depth);
    w.put(h.fps);
    for (double c : h.calibration) w.put(c);
    w.put(h.stripe_h.begin);
    w.put(h.stripe_h.end);
    w.put(h.stripe_v.begin);
    w.put(h.stripe_v.end);
    for (auto s : h.seeds) w.put(s);
    w.bytes(h.digest.data(), h.digest.size());

    const std::uint16_t max_count = static_cast<std::uint16_t>((1u << h.bit_depth) - 1u);
    for (const Frame& f : stack.frames) {
        if (f.rows() != h.rows || f.cols() != h.cols) throw std::invalid_argument("frame shape does not match header");
        for (Eigen::Index k = 0; k < f.size(); ++k) {
            const std::uint16_t v = f.data()[k];
            if (v > max_count) throw std::invalid_argument("sample exceeds bit depth");
            if (sample == 1)
                w.put(static_cast<std::uint8_t>(v));
            else
                w.put(v);
        }
    }
    return out;
}

FrameStack decode_frame_stack(const std::vector<std::uint8_t>& bytes) {
    Reader r(bytes);
    char magic[8];
    r.bytes(magic, sizeof(magic), "magic");
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw FormatError("bad magic, expected SU11FRM1", 0);

    FrameStack stack;
    auto& h = stack.header;
    h.rows = r.get<std::uint32_t>("rows");
    h.cols = r.get<std::uint32_t>("cols");
    h.n_frames = r.get<std::uint32_t>("n_frames");
    const std::size_t depth_offset = r.pos();
    h.bit_depth = r.get<std::uint8_t>("bit_depth");
    if (h.bit_depth != 8 && h.bit_depth != 16) throw FormatError("unsupported bit depth", depth_offset);
    h.fps = r.get<double>("fps");
    for (double& c : h.calibration) c = r.get<double>("calibration");
    h.stripe_h.begin = r.get<std::uint32_t>("stripe bounds");
    h.stripe_h.end = r.get<std::uint32_t>("stripe bounds");
    h.stripe_v.begin = r.get<std::uint32_t>("stripe bounds");
    h.stripe_v.end = r.get<std::uint32_t>("stripe bounds");
    for (auto& s : h.seeds) s = r.get<std::uint64_t>("seeds");
    r.bytes(h.digest.data(), h.digest.size(), "digest");

    auto stripe_ok = [&](StripeBounds b) { return b.begin < b.end && b.end <= h.rows; };
    if (h.rows == 0 || h.cols == 0) throw FormatError("zero frame dimension", 8);
    if (!stripe_ok(h.stripe_h) || !stripe_ok(h.stripe_v)) throw FormatError("stripe bounds outside the frame", 61);

    const std::size_t sample = h.bit_depth == 8 ? 1 : 2;
    const std::size_t per_frame = std::size_t{h.rows} * h.cols;
    // Sizes come from untrusted input; compare without overflowing.
    if (h.n_frames > 0 && per_frame * sample > r.remaining() / h.n_frames)
        throw FormatError("truncated frame data", bytes.size());
    const std::size_t payload = per_frame * sample * h.n_frames;
    if (r.remaining() < payload) throw FormatError("truncated frame data", bytes.size());
    if (r.remaining() > payload) throw FormatError("trailing bytes after frame data", r.pos() + payload);

    stack.frames.reserve(h.n_frames);
    for (std::uint32_t t = 0; t < h.n_frames; ++t) {
        Frame f(h.rows, h.cols);
        for (std::size_t k = 0; k < per_frame; ++k)
            f.data()[k] = sample == 1 ? r.get<std::uint8_t>("frame data") : r.get<std::uint16_t>("frame data");
        stack.frames.push_back(std::move(f));
    }
    return stack;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::system_error(errno, std::generic_category(), "cannot open " + tmp.string());
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) throw std::system_error(errno, std::generic_category(), "cannot write " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void write_frame_stack(const FrameStack& stack, const std::filesystem::path& path) {
    const auto bytes = encode_frame_stack(stack);
    write_file_atomic(path, std::string(bytes.begin(), bytes.end()));
}

FrameStack read_frame_stack(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_frame_stack(bytes);
}

}  // namespace su11
