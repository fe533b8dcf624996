#include "sclc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

namespace sclc {

std::string Shape4::str() const {
  std::ostringstream os;
  os << "(" << s << "," << c << "," << h << "," << w << ")";
  return os.str();
}

void Shape4::validate() const {
  if (s < 1 || c < 1 || h < 1 || w < 1) {
    throw ShapeError("Shape4: all dims must be >= 1, got " + str());
  }
}

RealTensor4::RealTensor4(Shape4 shape, double fill) : shape_(shape) {
  shape_.validate();
  data_.assign(shape_.count(), fill);
}

RealTensor4::RealTensor4(Shape4 shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  shape_.validate();
  if (data_.size() != shape_.count()) {
    throw ShapeError("RealTensor4: data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.str());
  }
}

bool RealTensor4::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

ComplexTensor4::ComplexTensor4(Shape4 shape, cplx fill) : shape_(shape) {
  shape_.validate();
  data_.assign(shape_.count(), fill);
}

ComplexTensor4::ComplexTensor4(Shape4 shape, std::vector<cplx> data)
    : shape_(shape), data_(std::move(data)) {
  shape_.validate();
  if (data_.size() != shape_.count()) {
    throw ShapeError("ComplexTensor4: data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.str());
  }
}

bool ComplexTensor4::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](const cplx& v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

namespace {

// Iterative radix-2 Cooley-Tukey on a strided view of `data`.
// sign = -1 forward, +1 inverse (scaling applied by the caller).
void fft1d(cplx* data, int n, std::size_t stride, int sign,
           const std::vector<cplx>& twiddle, int table_n) {
  // bit-reversal permutation
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i * stride], data[j * stride]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    const int half = len >> 1;
    const int step = table_n / len;
    for (int i = 0; i < n; i += len) {
      for (int k = 0; k < half; ++k) {
        cplx w = twiddle[static_cast<std::size_t>(k) * step];
        if (sign > 0) w = std::conj(w);
        cplx u = data[(i + k) * stride];
        cplx v = data[(i + k + half) * stride] * w;
        data[(i + k) * stride] = u + v;
        data[(i + k + half) * stride] = u - v;
      }
    }
  }
}

// Twiddle table for the largest transform length; smaller lengths index it
// with a stride.
std::vector<cplx> make_twiddle(int n) {
  std::vector<cplx> t(std::max(1, n / 2));
  for (int k = 0; k < n / 2; ++k) {
    double a = -2.0 * std::numbers::pi * k / n;
    t[k] = cplx(std::cos(a), std::sin(a));
  }
  return t;
}

ComplexTensor4 fft2_impl(ComplexTensor4 t, int sign) {
  const Shape4 sh = t.shape();
  if (!is_power_of_two(sh.h) || !is_power_of_two(sh.w)) {
    throw UnsupportedShapeError("fft2: plane size " + sh.str() +
                                " is not a power of two");
  }
  const int n = std::max(sh.h, sh.w);
  const std::vector<cplx> tw = make_twiddle(n);
  const std::size_t plane = sh.plane();
  cplx* base = t.data();
  const std::size_t planes = static_cast<std::size_t>(sh.s) * sh.c;
  for (std::size_t p = 0; p < planes; ++p) {
    cplx* pl = base + p * plane;
    if (sh.w > 1) {
      for (int y = 0; y < sh.h; ++y) fft1d(pl + static_cast<std::size_t>(y) * sh.w, sh.w, 1, sign, tw, n);
    }
    if (sh.h > 1) {
      for (int x = 0; x < sh.w; ++x) fft1d(pl + x, sh.h, sh.w, sign, tw, n);
    }
  }
  if (sign > 0) {
    const double norm = 1.0 / static_cast<double>(plane);
    for (auto& v : t.vec()) v *= norm;
  }
  return t;
}

// fftshift index map: output i reads input (i + ceil(n/2)) mod n, which puts
// DC at floor(n/2). ifftshift undoes it.
inline int shift_src(int i, int n) { return (i + (n + 1) / 2) % n; }
inline int unshift_src(int i, int n) { return (i + n / 2) % n; }

}  // namespace

ComplexTensor4 fft2(const RealTensor4& t) { return fft2_impl(to_complex(t), -1); }
ComplexTensor4 fft2(const ComplexTensor4& t) { return fft2_impl(t, -1); }
ComplexTensor4 ifft2(const ComplexTensor4& t) { return fft2_impl(t, +1); }

ComplexTensor4 to_complex(const RealTensor4& t) {
  ComplexTensor4 out(t.shape());
  const double* src = t.data();
  cplx* dst = out.data();
  for (std::size_t i = 0; i < t.size(); ++i) dst[i] = cplx(src[i], 0.0);
  return out;
}

ComplexTensor4 elementwise_mul(const ComplexTensor4& a, const ComplexTensor4& b,
                               BroadcastRule rule) {
  const Shape4& sa = a.shape();
  const Shape4& sb = b.shape();
  bool ok = sa.h == sb.h && sa.w == sb.w;
  switch (rule) {
    case BroadcastRule::None:
      ok = ok && sa.s == sb.s && sa.c == sb.c;
      break;
    case BroadcastRule::OverBatch:
      ok = ok && sb.s == 1 && sa.c == sb.c;
      break;
    case BroadcastRule::OverChannel:
      ok = ok && sa.s == sb.s && sb.c == 1;
      break;
  }
  if (!ok) {
    throw ShapeError("elementwise_mul: incompatible shapes " + sa.str() + " and " +
                     sb.str());
  }
  ComplexTensor4 out(sa);
  for (int s = 0; s < sa.s; ++s) {
    for (int c = 0; c < sa.c; ++c) {
      const int bs = (rule == BroadcastRule::OverBatch) ? 0 : s;
      const int bc = (rule == BroadcastRule::OverChannel) ? 0 : c;
      const cplx* pa = a.data() + a.index(s, c, 0, 0);
      const cplx* pb = b.data() + b.index(bs, bc, 0, 0);
      cplx* po = out.data() + out.index(s, c, 0, 0);
      const std::size_t n = sa.plane();
      for (std::size_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
    }
  }
  return out;
}

ComplexTensor4 center_crop_freq(const ComplexTensor4& t, int h2, int w2) {
  const Shape4 sh = t.shape();
  if (h2 < 1 || w2 < 1 || h2 > sh.h || w2 > sh.w) {
    throw ShapeError("center_crop_freq: invalid crop " + std::to_string(h2) + "x" +
                     std::to_string(w2) + " from " + sh.str());
  }
  const int y0 = sh.h / 2 - h2 / 2;  // block start in shifted layout
  const int x0 = sh.w / 2 - w2 / 2;
  ComplexTensor4 out(Shape4{sh.s, sh.c, h2, w2});
  for (int s = 0; s < sh.s; ++s)
    for (int c = 0; c < sh.c; ++c)
      for (int y = 0; y < h2; ++y)
        for (int x = 0; x < w2; ++x) {
          // natural output coord -> shifted block coord -> natural input coord
          const int yin = shift_src(y0 + unshift_src(y, h2), sh.h);
          const int xin = shift_src(x0 + unshift_src(x, w2), sh.w);
          out.at(s, c, y, x) = t.at(s, c, yin, xin);
        }
  return out;
}

ComplexTensor4 center_pad_freq(const ComplexTensor4& t, int h2, int w2) {
  const Shape4 sh = t.shape();
  if (h2 < sh.h || w2 < sh.w) {
    throw ShapeError("center_pad_freq: target " + std::to_string(h2) + "x" +
                     std::to_string(w2) + " smaller than " + sh.str());
  }
  const int y0 = h2 / 2 - sh.h / 2;
  const int x0 = w2 / 2 - sh.w / 2;
  ComplexTensor4 out(Shape4{sh.s, sh.c, h2, w2});
  for (int s = 0; s < sh.s; ++s)
    for (int c = 0; c < sh.c; ++c)
      for (int y = 0; y < sh.h; ++y)
        for (int x = 0; x < sh.w; ++x) {
          const int yout = shift_src(y0 + unshift_src(y, sh.h), h2);
          const int xout = shift_src(x0 + unshift_src(x, sh.w), w2);
          out.at(s, c, yout, xout) = t.at(s, c, y, x);
        }
  return out;
}

ComplexTensor4 conj(const ComplexTensor4& t) {
  ComplexTensor4 out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out.data()[i] = std::conj(t.data()[i]);
  return out;
}

RealTensor4 real_part(const ComplexTensor4& t) {
  RealTensor4 out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out.data()[i] = t.data()[i].real();
  return out;
}

RealTensor4 pad_spatial(const RealTensor4& k, int h, int w) {
  const Shape4 sh = k.shape();
  if (sh.h > h || sh.w > w) {
    throw ShapeError("pad_spatial: kernel " + sh.str() + " exceeds target " +
                     std::to_string(h) + "x" + std::to_string(w));
  }
  RealTensor4 out(Shape4{sh.s, sh.c, h, w});
  for (int s = 0; s < sh.s; ++s)
    for (int c = 0; c < sh.c; ++c)
      for (int y = 0; y < sh.h; ++y)
        for (int x = 0; x < sh.w; ++x) out.at(s, c, y, x) = k.at(s, c, y, x);
  return out;
}

RealTensor4 add(const RealTensor4& a, const RealTensor4& b) {
  if (!(a.shape() == b.shape()))
    throw ShapeError("add: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  RealTensor4 out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  return out;
}

ComplexTensor4 add(const ComplexTensor4& a, const ComplexTensor4& b) {
  if (!(a.shape() == b.shape()))
    throw ShapeError("add: shape mismatch " + a.shape().str() + " vs " + b.shape().str());
  ComplexTensor4 out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  return out;
}

RealTensor4 scale(const RealTensor4& a, double f) {
  RealTensor4 out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * f;
  return out;
}

ComplexTensor4 scale(const ComplexTensor4& a, double f) {
  ComplexTensor4 out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * f;
  return out;
}

void accumulate(RealTensor4& into, const RealTensor4& from) {
  if (!(into.shape() == from.shape()))
    throw ShapeError("accumulate: shape mismatch");
  for (std::size_t i = 0; i < into.size(); ++i) into.data()[i] += from.data()[i];
}

void accumulate(ComplexTensor4& into, const ComplexTensor4& from) {
  if (!(into.shape() == from.shape()))
    throw ShapeError("accumulate: shape mismatch");
  for (std::size_t i = 0; i < into.size(); ++i) into.data()[i] += from.data()[i];
}

double max_abs_diff(const RealTensor4& a, const RealTensor4& b) {
  if (!(a.shape() == b.shape()))
    throw ShapeError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

// --- Serialization ------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'C', 'L', 'C'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw FormatError("tensor read: truncated header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_header(std::ostream& out, const Shape4& sh, std::uint32_t dtype) {
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u32(out, static_cast<std::uint32_t>(sh.s));
  put_u32(out, static_cast<std::uint32_t>(sh.c));
  put_u32(out, static_cast<std::uint32_t>(sh.h));
  put_u32(out, static_cast<std::uint32_t>(sh.w));
  put_u32(out, dtype);
  put_u32(out, 0);  // reserved, pads header to 32 bytes
}

Shape4 read_header(std::istream& in, std::uint32_t expect_dtype) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("tensor read: bad magic");
  const std::uint32_t version = get_u32(in);
  if (version != kVersion)
    throw FormatError("tensor read: unsupported version " + std::to_string(version));
  Shape4 sh;
  sh.s = static_cast<int>(get_u32(in));
  sh.c = static_cast<int>(get_u32(in));
  sh.h = static_cast<int>(get_u32(in));
  sh.w = static_cast<int>(get_u32(in));
  const std::uint32_t dtype = get_u32(in);
  get_u32(in);  // reserved
  if (dtype != expect_dtype)
    throw FormatError("tensor read: dtype mismatch, got " + std::to_string(dtype));
  sh.validate();
  return sh;
}

static_assert(sizeof(double) == 8, "f64 serialization assumes 8-byte double");

void write_f64s(std::ostream& out, const double* p, std::size_t n) {
  // Little-endian host assumed (checked at startup on the targets we build for).
  out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * 8));
}

void read_f64s(std::istream& in, double* p, std::size_t n) {
  in.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n * 8));
  if (!in) throw FormatError("tensor read: truncated payload");
}

}  // namespace

void write_tensor(std::ostream& out, const RealTensor4& t) {
  write_header(out, t.shape(), 0);
  write_f64s(out, t.data(), t.size());
}

RealTensor4 read_real_tensor(std::istream& in) {
  const Shape4 sh = read_header(in, 0);
  RealTensor4 t(sh);
  read_f64s(in, t.data(), t.size());
  return t;
}

void save_tensor(const std::string& path, const RealTensor4& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("save_tensor: cannot open " + path);
  write_tensor(out, t);
}

void save_tensor(const std::string& path, const ComplexTensor4& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("save_tensor: cannot open " + path);
  write_header(out, t.shape(), 1);
  write_f64s(out, reinterpret_cast<const double*>(t.data()), t.size() * 2);
}

RealTensor4 load_real_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("load_tensor: cannot open " + path);
  return read_real_tensor(in);
}

ComplexTensor4 load_complex_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("load_tensor: cannot open " + path);
  const Shape4 sh = read_header(in, 1);
  ComplexTensor4 t(sh);
  read_f64s(in, reinterpret_cast<double*>(t.data()), t.size() * 2);
  return t;
}

}  // namespace sclc
