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

#ifndef SASR_IO_HPP
#define SASR_IO_HPP

#include "sasr/image.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sasr::io {

/// Unreadable file or malformed NT1/PNG payload.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// NT1: "NT1\0", u32 LE K, I, J, then K*I*J f64 LE values, channel-major.
void write_nt1(std::ostream& os, const Image& img);
Image read_nt1(std::istream& is);
std::string encode_nt1(const Image& img);
Image decode_nt1(std::string_view bytes);

Image load_nt1(const std::filesystem::path& path);
void save_nt1(const std::filesystem::path& path, const Image& img);

/// 8-bit gray or RGB PNG, samples divided by 255. Alpha is dropped.
Image load_png(const std::filesystem::path& path);

/// Writes 8-bit gray (K=1) or RGB (K=3); values are clamped to [0,1] and
/// multiplied by 255 with rounding.
void save_png(const std::filesystem::path& path, const Image& img);

/// Dispatch on extension: .png or .nt1.
Image load_image(const std::filesystem::path& path);
void save_image(const std::filesystem::path& path, const Image& img);

/// Writes `bytes` to a sibling temp file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace sasr::io

#endif  // SASR_IO_HPP
