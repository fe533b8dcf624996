#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "sclc/errors.hpp"

namespace sclc {

using cplx = std::complex<double>;

struct Shape4 {
  int s = 1;  // batch
  int c = 1;  // channels
  int h = 1;  // height
  int w = 1;  // width

  std::size_t count() const {
    return static_cast<std::size_t>(s) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  bool operator==(const Shape4&) const = default;
  std::string str() const;
  void validate() const;  // throws ShapeError on non-positive dims
};

// Dense row-major (s, c, h, w) tensor of doubles. Values are immutable by
// convention once an operation has returned the tensor; ops below are pure.
class RealTensor4 {
 public:
  RealTensor4() = default;
  explicit RealTensor4(Shape4 shape, double fill = 0.0);
  RealTensor4(Shape4 shape, std::vector<double> data);

  const Shape4& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::vector<double>& vec() { return data_; }
  const std::vector<double>& vec() const { return data_; }

  double& at(int s, int c, int y, int x) { return data_[index(s, c, y, x)]; }
  double at(int s, int c, int y, int x) const { return data_[index(s, c, y, x)]; }

  std::size_t index(int s, int c, int y, int x) const {
    return ((static_cast<std::size_t>(s) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  bool all_finite() const;

 private:
  Shape4 shape_{};
  std::vector<double> data_;
};

class ComplexTensor4 {
 public:
  ComplexTensor4() = default;
  explicit ComplexTensor4(Shape4 shape, cplx fill = {});
  ComplexTensor4(Shape4 shape, std::vector<cplx> data);

  const Shape4& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  cplx* data() { return data_.data(); }
  const cplx* data() const { return data_.data(); }
  std::vector<cplx>& vec() { return data_; }
  const std::vector<cplx>& vec() const { return data_; }

  cplx& at(int s, int c, int y, int x) { return data_[index(s, c, y, x)]; }
  cplx at(int s, int c, int y, int x) const { return data_[index(s, c, y, x)]; }

  std::size_t index(int s, int c, int y, int x) const {
    return ((static_cast<std::size_t>(s) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }

  bool all_finite() const;

 private:
  Shape4 shape_{};
  std::vector<cplx> data_;
};

// Broadcast rules for elementwise_mul. Kernel spectra broadcast over the
// batch axis; input spectra broadcast over the output-channel axis.
enum class BroadcastRule { None, OverBatch, OverChannel };

// --- FFT ---------------------------------------------------------------
// Unnormalized forward transform; inverse carries the 1/(H*W) factor.
// Only power-of-two plane sizes are accepted.
ComplexTensor4 fft2(const RealTensor4& t);
ComplexTensor4 fft2(const ComplexTensor4& t);
ComplexTensor4 ifft2(const ComplexTensor4& t);

bool is_power_of_two(int n);

// --- Elementwise and structural ops ------------------------------------
ComplexTensor4 elementwise_mul(const ComplexTensor4& a, const ComplexTensor4& b,
                               BroadcastRule rule = BroadcastRule::None);

// Crop/pad the centered (fftshifted) low-frequency block. For even target
// sizes the retained band after shift is rows/cols [H/2 - h2/2, H/2 + h2/2).
ComplexTensor4 center_crop_freq(const ComplexTensor4& t, int h2, int w2);
ComplexTensor4 center_pad_freq(const ComplexTensor4& t, int h2, int w2);

ComplexTensor4 conj(const ComplexTensor4& t);
RealTensor4 real_part(const ComplexTensor4& t);
ComplexTensor4 to_complex(const RealTensor4& t);

// Kernel placed at the origin corner, zero fill elsewhere (circular
// convolution convention).
RealTensor4 pad_spatial(const RealTensor4& k, int h, int w);

// Arithmetic helpers used throughout training.
RealTensor4 add(const RealTensor4& a, const RealTensor4& b);
ComplexTensor4 add(const ComplexTensor4& a, const ComplexTensor4& b);
RealTensor4 scale(const RealTensor4& a, double f);
ComplexTensor4 scale(const ComplexTensor4& a, double f);
void accumulate(RealTensor4& into, const RealTensor4& from);
void accumulate(ComplexTensor4& into, const ComplexTensor4& from);
double max_abs_diff(const RealTensor4& a, const RealTensor4& b);

// --- Serialization ------------------------------------------------------
// 32-byte header: magic "SCLC", version u32, shape 4*u32, dtype u32
// (0 = f64 real, 1 = interleaved f64 complex), 4 reserved bytes; then the
// payload as little-endian f64, row-major.
void save_tensor(const std::string& path, const RealTensor4& t);
void save_tensor(const std::string& path, const ComplexTensor4& t);
RealTensor4 load_real_tensor(const std::string& path);
ComplexTensor4 load_complex_tensor(const std::string& path);

void write_tensor(std::ostream& out, const RealTensor4& t);
RealTensor4 read_real_tensor(std::istream& in);

}  // namespace sclc
