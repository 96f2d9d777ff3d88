#include "mmsc/wav.hpp"

#include <cmath>
#include <cstring>

#include "mmsc/error.hpp"

namespace mmsc {

namespace {

constexpr uint16_t kFormatPcm = 1;

uint16_t read_u16(std::span<const uint8_t> b, size_t at) {
    return static_cast<uint16_t>(b[at] | (b[at + 1] << 8));
}

uint32_t read_u32(std::span<const uint8_t> b, size_t at) {
    return static_cast<uint32_t>(b[at]) | (static_cast<uint32_t>(b[at + 1]) << 8) |
           (static_cast<uint32_t>(b[at + 2]) << 16) | (static_cast<uint32_t>(b[at + 3]) << 24);
}

bool fourcc_is(std::span<const uint8_t> b, size_t at, const char* tag) {
    return std::memcmp(b.data() + at, tag, 4) == 0;
}

void push_u16(std::vector<uint8_t>& out, uint16_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>(v >> 8));
}

void push_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 8) & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 16) & 0xff));
    out.push_back(static_cast<uint8_t>((v >> 24) & 0xff));
}

void push_tag(std::vector<uint8_t>& out, const char* tag) {
    out.insert(out.end(), tag, tag + 4);
}

} // namespace

size_t frame_index(double t_s, uint32_t sample_rate_hz) {
    double scaled = t_s * static_cast<double>(sample_rate_hz) + 1e-6;
    if (scaled < 0.0) return 0;
    return static_cast<size_t>(std::floor(scaled));
}

AudioBuffer read_wav(std::span<const uint8_t> bytes) {
    if (bytes.size() < 12) raise(ErrorCode::TruncatedFile, "shorter than a RIFF header");
    if (!fourcc_is(bytes, 0, "RIFF") || !fourcc_is(bytes, 8, "WAVE")) {
        raise(ErrorCode::UnsupportedFormat, "not a RIFF/WAVE container");
    }

    AudioBuffer buf;
    bool have_fmt = false;
    size_t pos = 12;
    while (true) {
        if (pos + 8 > bytes.size()) {
            raise(ErrorCode::TruncatedFile, "no data chunk before end of file");
        }
        const size_t body = read_u32(bytes, pos + 4);
        const size_t body_at = pos + 8;

        if (fourcc_is(bytes, pos, "fmt ")) {
            if (body < 16 || body_at + body > bytes.size()) {
                raise(ErrorCode::TruncatedFile, "fmt chunk cut short");
            }
            const uint16_t format_tag = read_u16(bytes, body_at);
            if (format_tag != kFormatPcm) {
                raise(ErrorCode::UnsupportedFormat,
                      "format tag " + std::to_string(format_tag) + ", only PCM (1) supported");
            }
            buf.channels = read_u16(bytes, body_at + 2);
            if (buf.channels != 1 && buf.channels != 2) {
                raise(ErrorCode::UnsupportedFormat,
                      std::to_string(buf.channels) + " channels, only 1 or 2 supported");
            }
            buf.sample_rate_hz = read_u32(bytes, body_at + 4);
            if (buf.sample_rate_hz == 0) raise(ErrorCode::MalformedInput, "sample rate is 0");
            const uint16_t bits = read_u16(bytes, body_at + 14);
            if (bits != 16) {
                raise(ErrorCode::UnsupportedFormat,
                      std::to_string(bits) + " bits per sample, only 16 supported");
            }
            have_fmt = true;
        } else if (fourcc_is(bytes, pos, "data")) {
            if (!have_fmt) raise(ErrorCode::MalformedInput, "data chunk precedes fmt chunk");
            if (body_at + body > bytes.size()) {
                raise(ErrorCode::TruncatedFile, "data chunk cut short");
            }
            if (body % 2 != 0 || (body / 2) % buf.channels != 0) {
                raise(ErrorCode::MalformedInput, "data chunk is not whole PCM-16 frames");
            }
            buf.samples.resize(body / 2);
            for (size_t i = 0; i < buf.samples.size(); ++i) {
                buf.samples[i] = static_cast<int16_t>(read_u16(bytes, body_at + 2 * i));
            }
            return buf;
        }

        pos = body_at + body + (body % 2); // chunks are word-aligned
    }
}

std::vector<uint8_t> write_wav(const AudioBuffer& buf) {
    if (buf.channels != 1 && buf.channels != 2) {
        raise(ErrorCode::MalformedInput, "buffer must have 1 or 2 channels");
    }
    if (buf.samples.size() % buf.channels != 0) {
        raise(ErrorCode::MalformedInput, "sample count not divisible by channel count");
    }

    const uint32_t data_bytes = static_cast<uint32_t>(buf.samples.size() * 2);
    const uint16_t block_align = static_cast<uint16_t>(buf.channels * 2);

    std::vector<uint8_t> out;
    out.reserve(44 + data_bytes);
    push_tag(out, "RIFF");
    push_u32(out, 36 + data_bytes);
    push_tag(out, "WAVE");
    push_tag(out, "fmt ");
    push_u32(out, 16);
    push_u16(out, kFormatPcm);
    push_u16(out, buf.channels);
    push_u32(out, buf.sample_rate_hz);
    push_u32(out, buf.sample_rate_hz * block_align);
    push_u16(out, block_align);
    push_u16(out, 16);
    push_tag(out, "data");
    push_u32(out, data_bytes);
    for (int16_t s : buf.samples) {
        push_u16(out, static_cast<uint16_t>(s));
    }
    return out;
}

AudioBuffer slice_audio(const AudioBuffer& buf, const TimeSpan& span) {
    const size_t first = frame_index(span.start_s(), buf.sample_rate_hz);
    const size_t last = frame_index(span.end_s(), buf.sample_rate_hz);
    if (last > buf.frame_count()) {
        raise(ErrorCode::SpanOutOfRange,
              "span ends at frame " + std::to_string(last) + " of " +
                  std::to_string(buf.frame_count()));
    }
    AudioBuffer out;
    out.sample_rate_hz = buf.sample_rate_hz;
    out.channels = buf.channels;
    out.samples.assign(buf.samples.begin() + static_cast<ptrdiff_t>(first * buf.channels),
                       buf.samples.begin() + static_cast<ptrdiff_t>(last * buf.channels));
    return out;
}

} // namespace mmsc
