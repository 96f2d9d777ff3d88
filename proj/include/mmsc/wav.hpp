#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmsc/types.hpp"

namespace mmsc {

// Decoded PCM-16 audio. Samples are interleaved by channel; the sample
// count is always a multiple of the channel count.
struct AudioBuffer {
    uint32_t sample_rate_hz = 0;
    uint16_t channels = 1;
    std::vector<int16_t> samples;

    size_t frame_count() const { return channels == 0 ? 0 : samples.size() / channels; }
    double duration_s() const {
        return sample_rate_hz == 0 ? 0.0
                                   : static_cast<double>(frame_count()) / sample_rate_hz;
    }

    bool operator==(const AudioBuffer&) const = default;
};

// Frame index for a time offset: floor(t * rate), with a small absolute
// epsilon so that times computed as frame/rate land on their own frame.
size_t frame_index(double t_s, uint32_t sample_rate_hz);

// Decode a RIFF/WAVE container. Only PCM (format tag 1), 16 bits per
// sample, 1 or 2 channels. Chunks between fmt and data are skipped;
// anything after the data chunk is ignored.
// Throws UnsupportedFormat, TruncatedFile, MalformedInput.
AudioBuffer read_wav(std::span<const uint8_t> bytes);

// Canonical minimal encoding: 44-byte header (fmt then data, no extra
// chunks). Equal buffers serialize to identical bytes.
std::vector<uint8_t> write_wav(const AudioBuffer& buf);

// Copy frames [frame_index(start), frame_index(end)) across all channels.
// Sample rate and channel count are preserved. Throws SpanOutOfRange when
// the span ends past the buffer.
AudioBuffer slice_audio(const AudioBuffer& buf, const TimeSpan& span);

} // namespace mmsc
