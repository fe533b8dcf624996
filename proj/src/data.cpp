#include "sclc/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>

#include "sclc/rng.hpp"

namespace sclc {

void Dataset::validate() const {
  const Shape4 sh = images.shape();
  if (sh.s != static_cast<int>(labels.size()))
    throw FormatError("dataset '" + name + "': " + std::to_string(sh.s) +
                      " images but " + std::to_string(labels.size()) + " labels");
  if (class_count < 1) throw FormatError("dataset '" + name + "': no classes");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= class_count)
      throw FormatError("dataset '" + name + "': label " +
                        std::to_string(labels[i]) + " at index " +
                        std::to_string(i) + " out of range");
  }
  for (double v : images.vec()) {
    if (!(v >= 0.0 && v <= 1.0))
      throw FormatError("dataset '" + name + "': pixel value outside [0,1]");
  }
}

RealTensor4 gather_images(const Dataset& d, const std::vector<int>& idx) {
  const Shape4 sh = d.images.shape();
  RealTensor4 out(Shape4{static_cast<int>(idx.size()), sh.c, sh.h, sh.w});
  const std::size_t sample = static_cast<std::size_t>(sh.c) * sh.plane();
  for (std::size_t s = 0; s < idx.size(); ++s) {
    std::copy_n(d.images.vec().data() + idx[s] * sample, sample,
                out.data() + s * sample);
  }
  return out;
}

std::vector<int> gather_labels(const Dataset& d, const std::vector<int>& idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = d.labels[idx[i]];
  return out;
}

Dataset take(const Dataset& d, int n) {
  n = std::min(n, d.size());
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  Dataset out;
  out.images = gather_images(d, idx);
  out.labels = gather_labels(d, idx);
  out.class_count = d.class_count;
  out.name = d.name;
  return out;
}

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off,
                   const std::string& path) {
  if (off + 4 > b.size())
    throw FormatError(path + ": truncated at byte offset " + std::to_string(off));
  return (static_cast<std::uint32_t>(b[off]) << 24) |
         (static_cast<std::uint32_t>(b[off + 1]) << 16) |
         (static_cast<std::uint32_t>(b[off + 2]) << 8) |
         static_cast<std::uint32_t>(b[off + 3]);
}

}  // namespace

Dataset load_mnist(const std::string& dir, const std::string& split) {
  const bool train = split == "train";
  if (!train && split != "test")
    throw ConfigError("load_mnist: split must be 'train' or 'test'");
  const std::string img_path =
      dir + (train ? "/train-images-idx3-ubyte" : "/t10k-images-idx3-ubyte");
  const std::string lbl_path =
      dir + (train ? "/train-labels-idx1-ubyte" : "/t10k-labels-idx1-ubyte");

  const auto img = read_file(img_path);
  if (be32(img, 0, img_path) != 2051)
    throw FormatError(img_path + ": bad magic at byte offset 0 (want 2051)");
  const int n = static_cast<int>(be32(img, 4, img_path));
  const int rows = static_cast<int>(be32(img, 8, img_path));
  const int cols = static_cast<int>(be32(img, 12, img_path));
  if (rows != 28 || cols != 28)
    throw FormatError(img_path + ": expected 28x28 images");
  const std::size_t need = 16 + static_cast<std::size_t>(n) * rows * cols;
  if (img.size() < need)
    throw FormatError(img_path + ": truncated at byte offset " +
                      std::to_string(img.size()));

  const auto lbl = read_file(lbl_path);
  if (be32(lbl, 0, lbl_path) != 2049)
    throw FormatError(lbl_path + ": bad magic at byte offset 0 (want 2049)");
  if (static_cast<int>(be32(lbl, 4, lbl_path)) != n)
    throw FormatError(lbl_path + ": label count does not match image count");
  if (lbl.size() < 8 + static_cast<std::size_t>(n))
    throw FormatError(lbl_path + ": truncated at byte offset " +
                      std::to_string(lbl.size()));

  Dataset d;
  d.name = "mnist-" + split;
  d.class_count = 10;
  d.images = RealTensor4(Shape4{n, 1, 32, 32});  // zero-padded, centered
  d.labels.resize(n);
  const int pad = (32 - 28) / 2;
  for (int s = 0; s < n; ++s) {
    const std::size_t base = 16 + static_cast<std::size_t>(s) * 28 * 28;
    for (int y = 0; y < 28; ++y)
      for (int x = 0; x < 28; ++x)
        d.images.at(s, 0, y + pad, x + pad) = img[base + y * 28 + x] / 255.0;
    d.labels[s] = lbl[8 + s];
  }
  return d;
}

namespace {

constexpr std::size_t kCifarRecord = 3073;  // label + 3*32*32

void append_cifar_file(const std::string& path, Dataset& d,
                       std::vector<double>& pixels) {
  const auto bytes = read_file(path);
  if (bytes.empty() || bytes.size() % kCifarRecord != 0)
    throw FormatError(path + ": size " + std::to_string(bytes.size()) +
                      " is not a multiple of " + std::to_string(kCifarRecord) +
                      "-byte records (truncated at byte offset " +
                      std::to_string(bytes.size() - bytes.size() % kCifarRecord) +
                      ")");
  const std::size_t n = bytes.size() / kCifarRecord;
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t base = r * kCifarRecord;
    const int label = bytes[base];
    if (label > 9)
      throw FormatError(path + ": bad label at byte offset " + std::to_string(base));
    d.labels.push_back(label);
    for (std::size_t i = 1; i < kCifarRecord; ++i)
      pixels.push_back(bytes[base + i] / 255.0);
  }
}

}  // namespace

Dataset load_cifar10(const std::string& dir, const std::string& split) {
  Dataset d;
  d.name = "cifar10-" + split;
  d.class_count = 10;
  std::vector<double> pixels;
  if (split == "train") {
    bool any = false;
    for (int b = 1; b <= 5; ++b) {
      const std::string path = dir + "/data_batch_" + std::to_string(b) + ".bin";
      if (std::ifstream(path).good()) {
        append_cifar_file(path, d, pixels);
        any = true;
      }
    }
    if (!any) throw FormatError("no data_batch_*.bin files in " + dir);
  } else if (split == "test") {
    append_cifar_file(dir + "/test_batch.bin", d, pixels);
  } else {
    throw ConfigError("load_cifar10: split must be 'train' or 'test'");
  }
  d.images = RealTensor4(Shape4{static_cast<int>(d.labels.size()), 3, 32, 32},
                         std::move(pixels));
  return d;
}

Dataset resample(const Dataset& d, int side) {
  if (side < 1 || (side & (side - 1)) != 0)
    throw ConfigError("resample: side must be a power of two");
  const Shape4 sh = d.images.shape();
  if (sh.h != sh.w) throw ConfigError("resample: images must be square");
  Dataset out;
  out.labels = d.labels;
  out.class_count = d.class_count;
  out.name = d.name;
  if (side == sh.h) {
    out.images = d.images;
    return out;
  }
  out.images = RealTensor4(Shape4{sh.s, sh.c, side, side});
  if (side < sh.h) {
    const int f = sh.h / side;  // box-filter downsample
    const double inv = 1.0 / (f * f);
    for (int s = 0; s < sh.s; ++s)
      for (int c = 0; c < sh.c; ++c)
        for (int y = 0; y < side; ++y)
          for (int x = 0; x < side; ++x) {
            double acc = 0.0;
            for (int dy = 0; dy < f; ++dy)
              for (int dx = 0; dx < f; ++dx)
                acc += d.images.at(s, c, y * f + dy, x * f + dx);
            out.images.at(s, c, y, x) = acc * inv;
          }
  } else {
    const int f = side / sh.h;  // zero-insertion upsample
    for (int s = 0; s < sh.s; ++s)
      for (int c = 0; c < sh.c; ++c)
        for (int y = 0; y < sh.h; ++y)
          for (int x = 0; x < sh.w; ++x)
            out.images.at(s, c, y * f, x * f) = d.images.at(s, c, y, x);
  }
  return out;
}

namespace {

// Per-class generation recipe. Classes come in five template groups of two:
// the group is strong low-frequency signal, the within-group distinction is
// a weak low-frequency component plus a strong class-specific grating whose
// phase is random per sample. A linear model can only use the low band the
// pooling keeps, so the pairs are where teacher knowledge matters.
struct ClassRecipe {
  int fy, fx;        // group template frequency
  double phase[3];   // group template phase per channel
  int dy, dx;        // weak class-distinct frequency
  double dphase;
  int gy, gx;        // random-phase grating frequency
};

ClassRecipe class_recipe(int c) {
  static constexpr int kGroupFreq[5][2] = {{1, 1}, {1, 2}, {2, 1}, {2, 2}, {0, 1}};
  static constexpr int kClassFreq[10][2] = {{0, 2}, {2, 0}, {0, 2}, {2, 0}, {1, 0},
                                            {0, 1}, {1, 1}, {2, 2}, {1, 2}, {2, 1}};
  const int g = c % 5;
  ClassRecipe r;
  r.fy = kGroupFreq[g][0];
  r.fx = kGroupFreq[g][1];
  Rng grng(0x5c1c1000u + static_cast<std::uint64_t>(g));
  for (double& p : r.phase) p = grng.uniform(0.0, 2.0 * std::numbers::pi);
  r.dy = kClassFreq[c][0];
  r.dx = kClassFreq[c][1];
  Rng crng(0x5c1c2000u + static_cast<std::uint64_t>(c));
  r.dphase = crng.uniform(0.0, 2.0 * std::numbers::pi);
  r.gy = 4 + c % 3;
  r.gx = 4 + (c / 3) % 4;
  return r;
}

void write_cifar_file(const std::string& path, int count, std::uint64_t seed,
                      double label_flip_prob) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open " + path + " for writing");
  Rng rng(seed);
  const double tau = 2.0 * std::numbers::pi;
  std::vector<unsigned char> rec(kCifarRecord);
  for (int s = 0; s < count; ++s) {
    const int label = static_cast<int>(rng.below(10));
    const ClassRecipe r = class_recipe(label);
    const double gphase = rng.uniform(0.0, tau);  // random per sample
    const int ny = 12 + static_cast<int>(rng.below(4));
    const int nx = 12 + static_cast<int>(rng.below(4));
    const double nphase = rng.uniform(0.0, tau);
    // in-band interference at template frequencies, random per sample
    int ly[3], lx[3];
    double lphase[3];
    for (int i = 0; i < 3; ++i) {
      ly[i] = static_cast<int>(rng.below(3));
      lx[i] = static_cast<int>(rng.below(3));
      lphase[i] = rng.uniform(0.0, tau);
    }
    int written_label = label;
    if (rng.uniform() < label_flip_prob)
      written_label = static_cast<int>(rng.below(10));
    rec[0] = static_cast<unsigned char>(written_label);
    std::size_t i = 1;
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
          const double templ =
              0.12 * std::cos(tau * (r.fy * y + r.fx * x) / 32.0 +
                              r.phase[c] + 0.7 * c) +
              0.05 * std::cos(tau * (r.dy * y + r.dx * x) / 32.0 +
                              r.dphase + 0.9 * c);
          const double grating =
              0.30 * std::cos(tau * (r.gy * y + r.gx * x) / 32.0 + gphase);
          const double clutter =
              0.18 * std::cos(tau * (ny * y + nx * x) / 32.0 + nphase) +
              0.10 * rng.uniform(-1.0, 1.0);
          double low_noise = 0.0;
          for (int i = 0; i < 3; ++i)
            low_noise +=
                0.20 * std::cos(tau * (ly[i] * y + lx[i] * x) / 32.0 + lphase[i]);
          const double v =
              std::clamp(0.5 + templ + grating + clutter + low_noise, 0.0, 1.0);
          rec[i++] = static_cast<unsigned char>(std::lround(v * 255.0));
        }
    out.write(reinterpret_cast<const char*>(rec.data()),
              static_cast<std::streamsize>(rec.size()));
  }
}

}  // namespace

void write_synthetic_cifar(const std::string& dir, int train_count,
                           int test_count, std::uint64_t seed) {
  // labels in the training split carry 40% flip noise; the soft teacher
  // signal is what lets a distilled student ride it out
  write_cifar_file(dir + "/data_batch_1.bin", train_count, seed, 0.40);
  write_cifar_file(dir + "/test_batch.bin", test_count, seed + 1, 0.0);
}

}  // namespace sclc
