#include "msr/wav.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

#include "msr/errors.hpp"

namespace msr {
namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

  void need(std::size_t n) const {
    if (remaining() < n) throw InvalidInputError("truncated WAV data");
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }
  std::string tag() {
    need(4);
    std::string t(reinterpret_cast<const char*>(bytes_.data() + pos_), 4);
    pos_ += 4;
    return t;
  }
  std::span<const std::uint8_t> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  void skip(std::size_t n) {
    n = std::min(n, remaining());
    pos_ += n;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint16_t bits = 0;
};

float decode_sample(const std::uint8_t* p, const FmtChunk& fmt) {
  switch (fmt.bits) {
    case 16: {
      auto v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
      return static_cast<float>(v) / 32768.0f;
    }
    case 24: {
      std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
      if (v & 0x800000) v |= ~0xFFFFFF;
      return static_cast<float>(static_cast<double>(v) / 8388608.0);
    }
    case 32: {
      std::uint32_t raw = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                          (static_cast<std::uint32_t>(p[2]) << 16) |
                          (static_cast<std::uint32_t>(p[3]) << 24);
      if (fmt.format == kFormatFloat) return std::bit_cast<float>(raw);
      return static_cast<float>(static_cast<double>(static_cast<std::int32_t>(raw)) / 2147483648.0);
    }
    default:
      throw InvalidInputError("unsupported WAV bit depth " + std::to_string(fmt.bits));
  }
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

struct ParsedWav {
  FmtChunk fmt;
  std::span<const std::uint8_t> data;
  std::size_t data_offset = 0;
};

ParsedWav parse_wav(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  if (in.remaining() < 12 || in.tag() != "RIFF") throw InvalidInputError("not a RIFF file");
  in.u32();
  if (in.tag() != "WAVE") throw InvalidInputError("RIFF file is not WAVE");

  std::optional<FmtChunk> fmt;
  std::optional<std::span<const std::uint8_t>> data;
  std::size_t data_offset = 0;
  while (in.remaining() >= 8 && !(fmt && data)) {
    const std::string id = in.tag();
    const std::uint32_t size = in.u32();
    if (id == "fmt ") {
      if (size < 16) throw InvalidInputError("fmt chunk too small");
      auto body = in.take(size);
      ByteReader f(body);
      FmtChunk c;
      c.format = f.u16();
      c.channels = f.u16();
      c.sample_rate = f.u32();
      f.u32();
      c.block_align = f.u16();
      c.bits = f.u16();
      if (c.format == kFormatExtensible) {
        if (size < 40) throw InvalidInputError("extensible fmt chunk too small");
        f.u16();
        f.u16();
        f.u32();
        c.format = f.u16();  // first two bytes of the subformat GUID
      }
      fmt = c;
    } else if (id == "data") {
      // Some writers leave the size field unset for streamed output.
      const std::size_t n = std::min<std::size_t>(size, in.remaining());
      data_offset = in.position();
      data = in.take(n);
    } else {
      in.skip(size);
    }
    if (size % 2 == 1 && in.remaining() > 0) in.skip(1);
  }
  if (!fmt) throw InvalidInputError("WAV has no fmt chunk");
  if (!data) throw InvalidInputError("WAV has no data chunk");
  if (fmt->format != kFormatPcm && fmt->format != kFormatFloat) {
    throw InvalidInputError("unsupported WAV sample encoding " + std::to_string(fmt->format));
  }
  if (fmt->format == kFormatFloat && fmt->bits != 32) {
    throw InvalidInputError("only 32-bit float WAV is supported");
  }
  if (fmt->channels < 1 || fmt->channels > 2) {
    throw InvalidInputError("only mono or stereo WAV is supported");
  }
  if (fmt->bits != 16 && fmt->bits != 24 && fmt->bits != 32) {
    throw InvalidInputError("unsupported WAV bit depth " + std::to_string(fmt->bits));
  }
  if (fmt->sample_rate == 0) throw InvalidInputError("WAV sample rate is zero");
  if (fmt->block_align != fmt->bits / 8u * fmt->channels) {
    throw InvalidInputError("inconsistent WAV block alignment");
  }

  return ParsedWav{*fmt, *data, data_offset};
}

}  // namespace

DecodedWav decode_wav(std::span<const std::uint8_t> bytes) {
  const ParsedWav parsed = parse_wav(bytes);
  const FmtChunk* fmt = &parsed.fmt;
  const auto* data = &parsed.data;
  const std::size_t bytes_per_sample = fmt->bits / 8u;
  const std::size_t frames = data->size() / fmt->block_align;
  std::vector<std::vector<float>> channels(fmt->channels, std::vector<float>(frames));
  const std::uint8_t* p = data->data();
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::size_t c = 0; c < fmt->channels; ++c) {
      channels[c][i] = decode_sample(p, *fmt);
      p += bytes_per_sample;
    }
  }

  DecodedWav out;
  out.clip = AudioClip(std::move(channels), static_cast<int>(fmt->sample_rate));
  out.format = fmt->format == kFormatFloat ? SampleFormat::Float32 : SampleFormat::Pcm16;
  return out;
}

WavLayout inspect_wav(std::span<const std::uint8_t> bytes) {
  const ParsedWav parsed = parse_wav(bytes);
  WavLayout layout;
  layout.data_offset = parsed.data_offset;
  layout.data_size = parsed.data.size();
  layout.block_align = parsed.fmt.block_align;
  layout.channels = parsed.fmt.channels;
  layout.sample_rate_hz = static_cast<int>(parsed.fmt.sample_rate);
  return layout;
}

DecodedWav read_wav(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw InvalidInputError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(file)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

std::vector<std::uint8_t> encode_wav(const AudioClip& clip, SampleFormat format) {
  const std::uint16_t channels = static_cast<std::uint16_t>(clip.channel_count());
  const std::uint16_t bits = format == SampleFormat::Pcm16 ? 16 : 32;
  const std::uint16_t block_align = static_cast<std::uint16_t>(channels * bits / 8);
  const std::size_t data_bytes = clip.frame_count() * block_align;
  if (data_bytes > 0xFFFFFFFFull - 36) throw InvalidInputError("audio too long for RIFF/WAVE");

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, static_cast<std::uint32_t>(36 + data_bytes));
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, format == SampleFormat::Pcm16 ? kFormatPcm : kFormatFloat);
  put_u16(out, channels);
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate_hz()));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate_hz()) * block_align);
  put_u16(out, block_align);
  put_u16(out, bits);
  put_tag(out, "data");
  put_u32(out, static_cast<std::uint32_t>(data_bytes));

  for (std::size_t i = 0; i < clip.frame_count(); ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const float s = clip.channel(c)[i];
      if (format == SampleFormat::Pcm16) {
        const double scaled = std::round(static_cast<double>(s) * 32768.0);
        const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
        put_u16(out, static_cast<std::uint16_t>(v));
      } else {
        put_u32(out, std::bit_cast<std::uint32_t>(s));
      }
    }
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip, SampleFormat format) {
  const auto bytes = encode_wav(clip, format);
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw InvalidInputError("cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!file) throw InvalidInputError("failed writing " + path.string());
}

}  // namespace msr
