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

#ifndef SASR_IMAGE_HPP
#define SASR_IMAGE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sasr {

using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Matrix = RowMatrix<double>;

/// Violated operation precondition (bad sizes, bad parameters).
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Operands whose shapes do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown (NaN/Inf, divergence).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * K-channel image on an I x J grid.
 *
 * Storage is a row-major K x (I*J) Eigen matrix, which is exactly the
 * channel-major (k, i, j) element order used by the NT1 format. A channel
 * plane is viewed as a row-major I x J map without copying.
 */
template <typename Scalar>
class ImageT {
 public:
  using Storage = RowMatrix<Scalar>;
  using Plane = Eigen::Map<RowMatrix<Scalar>>;
  using ConstPlane = Eigen::Map<const RowMatrix<Scalar>>;

  ImageT() = default;

  ImageT(Index channels, Index height, Index width, Scalar fill = Scalar(0))
      : height_(height), width_(width) {
    if (channels <= 0 || height <= 0 || width <= 0)
      throw PreconditionError("image dimensions must be positive");
    data_ = Storage::Constant(channels, height * width, fill);
  }

  ImageT(Index height, Index width, Storage data) : height_(height), width_(width), data_(std::move(data)) {
    if (data_.rows() <= 0 || height <= 0 || width <= 0 || data_.cols() != height * width)
      throw DimensionError("image storage does not match K x (I*J)");
  }

  static ImageT constant(Index channels, Index height, Index width, Scalar value) {
    return ImageT(channels, height, width, value);
  }

  Index channels() const { return data_.rows(); }
  Index height() const { return height_; }
  Index width() const { return width_; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Scalar& operator()(Index k, Index i, Index j) { return data_(k, i * width_ + j); }
  Scalar operator()(Index k, Index i, Index j) const { return data_(k, i * width_ + j); }

  Plane channel(Index k) { return Plane(data_.row(k).data(), height_, width_); }
  ConstPlane channel(Index k) const { return ConstPlane(data_.row(k).data(), height_, width_); }

  Storage& data() { return data_; }
  const Storage& data() const { return data_; }

  bool same_shape(const ImageT& other) const {
    return channels() == other.channels() && height_ == other.height_ && width_ == other.width_;
  }

  bool all_finite() const { return data_.allFinite(); }

  template <typename Other>
  ImageT<Other> cast() const {
    return ImageT<Other>(height_, width_, data_.template cast<Other>());
  }

  friend bool operator==(const ImageT& a, const ImageT& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  Index height_ = 0;
  Index width_ = 0;
  Storage data_;
};

using Image = ImageT<double>;

/// Per-element weights sharing the image shape contract (edge maps W, SA weights H).
using WeightMatrix = Image;

template <typename Scalar>
void require_same_shape(const ImageT<Scalar>& a, const ImageT<Scalar>& b, const char* what) {
  if (!a.same_shape(b)) throw DimensionError(std::string(what) + ": shape mismatch");
}

/// Odd-length ordered sequence of frames; the target is the center frame.
struct FrameStack {
  std::vector<Image> frames;

  explicit FrameStack(std::vector<Image> f) : frames(std::move(f)) {
    if (frames.empty() || frames.size() % 2 == 0)
      throw PreconditionError("frame stack length must be odd");
    for (const auto& fr : frames)
      if (!fr.same_shape(frames.front())) throw DimensionError("frame stack: frames differ in shape");
  }

  std::size_t size() const { return frames.size(); }
  std::size_t center_index() const { return (frames.size() - 1) / 2; }
  const Image& center() const { return frames[center_index()]; }
};

enum class PadMode { reflect, replicate };

struct PaddingPolicy {
  PadMode mode = PadMode::reflect;
  Index margin_y = 0;
  Index margin_x = 0;

  static PaddingPolicy uniform(Index margin, PadMode mode = PadMode::reflect) {
    return {mode, margin, margin};
  }
};

/// Maps an out-of-range index into [0, n) following the padding mode.
/// Reflect does not repeat the edge sample: -1 -> 1, n -> n - 2.
inline Index border_index(Index idx, Index n, PadMode mode) {
  if (idx >= 0 && idx < n) return idx;
  if (mode == PadMode::replicate || n == 1) return idx < 0 ? 0 : n - 1;
  const Index period = 2 * (n - 1);
  Index r = idx % period;
  if (r < 0) r += period;
  return r < n ? r : period - r;
}

template <typename Scalar>
ImageT<Scalar> pad(const ImageT<Scalar>& img, const PaddingPolicy& policy) {
  if (policy.margin_y < 0 || policy.margin_x < 0) throw PreconditionError("pad: negative margin");
  if (policy.mode == PadMode::reflect &&
      (policy.margin_y >= img.height() || policy.margin_x >= img.width()))
    throw PreconditionError("pad: reflect margin must be smaller than the image dimension");
  const Index h = img.height() + 2 * policy.margin_y;
  const Index w = img.width() + 2 * policy.margin_x;
  ImageT<Scalar> out(img.channels(), h, w);
  for (Index k = 0; k < img.channels(); ++k) {
    auto src = img.channel(k);
    auto dst = out.channel(k);
    for (Index i = 0; i < h; ++i) {
      const Index si = border_index(i - policy.margin_y, img.height(), policy.mode);
      for (Index j = 0; j < w; ++j)
        dst(i, j) = src(si, border_index(j - policy.margin_x, img.width(), policy.mode));
    }
  }
  return out;
}

template <typename Scalar>
ImageT<Scalar> crop(const ImageT<Scalar>& img, Index top, Index left, Index height, Index width) {
  if (top < 0 || left < 0 || height <= 0 || width <= 0 || top + height > img.height() ||
      left + width > img.width())
    throw PreconditionError("crop: window outside the image");
  ImageT<Scalar> out(img.channels(), height, width);
  for (Index k = 0; k < img.channels(); ++k)
    out.channel(k) = img.channel(k).block(top, left, height, width);
  return out;
}

/// ITU-R BT.601 luma for RGB, identity for a single channel.
template <typename Scalar>
ImageT<Scalar> to_luminance(const ImageT<Scalar>& img) {
  if (img.channels() == 1) return img;
  if (img.channels() != 3) throw PreconditionError("to_luminance: unsupported channel count");
  typename ImageT<Scalar>::Storage y =
      Scalar(0.299) * img.data().row(0) + Scalar(0.587) * img.data().row(1) + Scalar(0.114) * img.data().row(2);
  return ImageT<Scalar>(img.height(), img.width(), std::move(y));
}

/// Repeats a single-channel map across `channels` channels.
template <typename Scalar>
ImageT<Scalar> broadcast_channels(const ImageT<Scalar>& img, Index channels) {
  if (img.channels() != 1) throw PreconditionError("broadcast_channels: input must be single-channel");
  return ImageT<Scalar>(img.height(), img.width(), img.data().replicate(channels, 1));
}

/// Catmull-Rom cubic convolution kernel (a = -0.5).
inline double cubic_kernel(double x) {
  constexpr double a = -0.5;
  x = std::abs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

/**
 * Dense out x in resampling matrix for one axis. Sample centers are aligned
 * at half-pixel offsets, taps outside the input are clamped (replicate
 * border), so every row sums to one.
 */
inline Matrix cubic_resample_matrix(Index in, Index out) {
  if (in <= 0 || out <= 0) throw PreconditionError("resample: sizes must be positive");
  Matrix r = Matrix::Zero(out, in);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (Index o = 0; o < out; ++o) {
    const double src = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    const double base = std::floor(src);
    const double t = src - base;
    for (int tap = -1; tap <= 2; ++tap) {
      const Index idx = border_index(static_cast<Index>(base) + tap, in, PadMode::replicate);
      r(o, idx) += cubic_kernel(t - tap);
    }
  }
  return r;
}

template <typename Scalar>
ImageT<Scalar> resize_bicubic(const ImageT<Scalar>& img, Index out_height, Index out_width) {
  const RowMatrix<Scalar> rh = cubic_resample_matrix(img.height(), out_height).template cast<Scalar>();
  const RowMatrix<Scalar> rw = cubic_resample_matrix(img.width(), out_width).template cast<Scalar>();
  ImageT<Scalar> out(img.channels(), out_height, out_width);
  for (Index k = 0; k < img.channels(); ++k) out.channel(k).noalias() = rh * img.channel(k) * rw.transpose();
  return out;
}

/// Output extent of a resize by `scale`: round(n * scale), at least one sample.
inline Index scaled_extent(Index n, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw PreconditionError("bicubic_resize: scale must be positive");
  return std::max<Index>(1, static_cast<Index>(std::llround(static_cast<double>(n) * scale)));
}

template <typename Scalar>
ImageT<Scalar> bicubic_resize(const ImageT<Scalar>& img, double scale) {
  return resize_bicubic(img, scaled_extent(img.height(), scale), scaled_extent(img.width(), scale));
}

}  // namespace sasr

#endif  // SASR_IMAGE_HPP
