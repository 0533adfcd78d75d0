/*
 * Copyright 2026 The sasr Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "sasr/io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <vector>

namespace sasr::io {

namespace {

constexpr std::array<char, 4> kMagic = {'N', 'T', '1', '\0'};

static_assert(std::endian::native == std::endian::little, "NT1 codec assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out.append(buf, 4);
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v;
  std::memcpy(&v, bytes.data() + offset, 4);
  return v;
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

}  // namespace

std::string encode_nt1(const Image& img) {
  std::string out;
  out.reserve(16 + static_cast<std::size_t>(img.size()) * 8);
  out.append(kMagic.data(), kMagic.size());
  put_u32(out, static_cast<std::uint32_t>(img.channels()));
  put_u32(out, static_cast<std::uint32_t>(img.height()));
  put_u32(out, static_cast<std::uint32_t>(img.width()));
  out.append(reinterpret_cast<const char*>(img.data().data()), static_cast<std::size_t>(img.size()) * 8);
  return out;
}

Image decode_nt1(std::string_view bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic.data(), 4) != 0)
    throw FormatError("NT1: bad magic");
  const std::uint64_t k = get_u32(bytes, 4), i = get_u32(bytes, 8), j = get_u32(bytes, 12);
  if (k == 0 || i == 0 || j == 0) throw FormatError("NT1: zero dimension");
  const std::uint64_t count = k * i * j;
  if (bytes.size() != 16 + count * 8) throw FormatError("NT1: payload length does not match header");
  Image img(static_cast<Index>(k), static_cast<Index>(i), static_cast<Index>(j));
  std::memcpy(img.data().data(), bytes.data() + 16, count * 8);
  if (!img.all_finite()) throw FormatError("NT1: non-finite sample");
  return img;
}

void write_nt1(std::ostream& os, const Image& img) {
  const std::string bytes = encode_nt1(img);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Image read_nt1(std::istream& is) {
  char header[16];
  if (!is.read(header, 16)) throw FormatError("NT1: truncated header");
  const std::string_view hv(header, 16);
  if (std::memcmp(header, kMagic.data(), 4) != 0) throw FormatError("NT1: bad magic");
  const std::uint64_t count =
      std::uint64_t(get_u32(hv, 4)) * get_u32(hv, 8) * get_u32(hv, 12);
  std::string bytes(hv);
  bytes.resize(16 + count * 8);
  if (!is.read(bytes.data() + 16, static_cast<std::streamsize>(count * 8)))
    throw FormatError("NT1: truncated payload");
  return decode_nt1(bytes);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Image load_nt1(const std::filesystem::path& path) { return decode_nt1(read_file(path)); }

void save_nt1(const std::filesystem::path& path, const Image& img) { write_file_atomic(path, encode_nt1(img)); }

Image load_png(const std::filesystem::path& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  const std::string bytes = read_file(path);
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()))
    throw FormatError("PNG: " + path.string() + ": " + png.message);
  const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
  png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const Index channels = color ? 3 : 1;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = png.message;
    png_image_free(&png);
    throw FormatError("PNG: " + path.string() + ": " + msg);
  }
  const Index h = png.height, w = png.width;
  Image img(channels, h, w);
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j)
      for (Index k = 0; k < channels; ++k)
        img(k, i, j) = buffer[static_cast<std::size_t>((i * w + j) * channels + k)] / 255.0;
  return img;
}

void save_png(const std::filesystem::path& path, const Image& img) {
  if (img.channels() != 1 && img.channels() != 3) throw PreconditionError("PNG export needs 1 or 3 channels");
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(img.width());
  png.height = static_cast<png_uint_32>(img.height());
  png.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const Index channels = img.channels();
  std::vector<png_byte> buffer(static_cast<std::size_t>(img.size()));
  for (Index i = 0; i < img.height(); ++i)
    for (Index j = 0; j < img.width(); ++j)
      for (Index k = 0; k < channels; ++k) {
        const double v = std::clamp(img(k, i, j), 0.0, 1.0);
        buffer[static_cast<std::size_t>((i * img.width() + j) * channels + k)] =
            static_cast<png_byte>(std::lround(v * 255.0));
      }
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, buffer.data(), 0, nullptr))
    throw FormatError(std::string("PNG encode: ") + png.message);
  std::string encoded(size, '\0');
  if (!png_image_write_to_memory(&png, encoded.data(), &size, 0, buffer.data(), 0, nullptr))
    throw FormatError(std::string("PNG encode: ") + png.message);
  encoded.resize(size);
  write_file_atomic(path, encoded);
}

Image load_image(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".nt1") return load_nt1(path);
  throw FormatError("unsupported image format: " + path.string());
}

void save_image(const std::filesystem::path& path, const Image& img) {
  const std::string ext = lower_extension(path);
  if (ext == ".png") return save_png(path, img);
  if (ext == ".nt1") return save_nt1(path, img);
  throw FormatError("unsupported image format: " + path.string());
}

}  // namespace sasr::io
