#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "sclc/data.hpp"

using namespace sclc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / "sclc_data_test") {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

void write_bytes(const fs::path& p, const std::vector<unsigned char>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()),
            static_cast<std::streamsize>(b.size()));
}

void push_be32(std::vector<unsigned char>& b, std::uint32_t v) {
  b.push_back(static_cast<unsigned char>(v >> 24));
  b.push_back(static_cast<unsigned char>(v >> 16));
  b.push_back(static_cast<unsigned char>(v >> 8));
  b.push_back(static_cast<unsigned char>(v));
}

// Two 28x28 images with known corner values and labels {3, 7}.
void write_tiny_mnist(const fs::path& dir) {
  std::vector<unsigned char> img;
  push_be32(img, 2051);
  push_be32(img, 2);
  push_be32(img, 28);
  push_be32(img, 28);
  for (int s = 0; s < 2; ++s)
    for (int i = 0; i < 28 * 28; ++i)
      img.push_back(static_cast<unsigned char>(s == 0 && i == 0 ? 255 : s * 10));
  write_bytes(dir / "train-images-idx3-ubyte", img);

  std::vector<unsigned char> lbl;
  push_be32(lbl, 2049);
  push_be32(lbl, 2);
  lbl.push_back(3);
  lbl.push_back(7);
  write_bytes(dir / "train-labels-idx1-ubyte", lbl);
}

}  // namespace

TEST_CASE("dataset validation") {
  Dataset d;
  d.name = "toy";
  d.class_count = 2;
  d.images = RealTensor4(Shape4{2, 1, 2, 2}, 0.5);
  d.labels = {0, 1};
  CHECK_NOTHROW(d.validate());
  SUBCASE("count mismatch") {
    d.labels.push_back(0);
    CHECK_THROWS_AS(d.validate(), FormatError);
  }
  SUBCASE("label out of range") {
    d.labels[1] = 2;
    CHECK_THROWS_AS(d.validate(), FormatError);
  }
  SUBCASE("pixel out of range") {
    d.images.at(0, 0, 0, 0) = 1.5;
    CHECK_THROWS_AS(d.validate(), FormatError);
  }
}

TEST_CASE("gather and take") {
  Dataset d;
  d.name = "toy";
  d.class_count = 4;
  d.images = RealTensor4(Shape4{4, 1, 1, 2});
  for (int s = 0; s < 4; ++s) d.images.at(s, 0, 0, 0) = s / 10.0;
  d.labels = {0, 1, 2, 3};
  RealTensor4 b = gather_images(d, {3, 1});
  CHECK(b.shape() == Shape4{2, 1, 1, 2});
  CHECK(b.at(0, 0, 0, 0) == 0.3);
  CHECK(b.at(1, 0, 0, 0) == 0.1);
  CHECK(gather_labels(d, {3, 1}) == std::vector<int>{3, 1});
  Dataset t = take(d, 2);
  CHECK(t.size() == 2);
  CHECK(t.labels == std::vector<int>{0, 1});
}

TEST_CASE("mnist loader") {
  TempDir dir;
  write_tiny_mnist(dir.path);
  Dataset d = load_mnist(dir.str(), "train");
  CHECK(d.size() == 2);
  CHECK(d.class_count == 10);
  CHECK(d.labels == std::vector<int>{3, 7});
  CHECK(d.images.shape() == Shape4{2, 1, 32, 32});
  // 28x28 content centered in the 32x32 frame, so (0,0) of the raw image
  // lands at (2,2); the border stays zero
  CHECK(d.images.at(0, 0, 2, 2) == doctest::Approx(1.0));
  CHECK(d.images.at(0, 0, 0, 0) == 0.0);
  CHECK(d.images.at(0, 0, 31, 31) == 0.0);
  CHECK(d.images.at(1, 0, 15, 15) == doctest::Approx(10.0 / 255.0));
  CHECK_NOTHROW(d.validate());

  SUBCASE("bad magic") {
    std::vector<unsigned char> junk;
    push_be32(junk, 1234);
    write_bytes(dir.path / "train-images-idx3-ubyte", junk);
    CHECK_THROWS_AS(load_mnist(dir.str(), "train"), FormatError);
  }
  SUBCASE("truncated image payload") {
    std::vector<unsigned char> img;
    push_be32(img, 2051);
    push_be32(img, 2);
    push_be32(img, 28);
    push_be32(img, 28);
    img.resize(img.size() + 100);  // far short of 2*784
    write_bytes(dir.path / "train-images-idx3-ubyte", img);
    CHECK_THROWS_AS(load_mnist(dir.str(), "train"), FormatError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_mnist(dir.str(), "test"), FormatError);
  }
}

TEST_CASE("cifar10 loader") {
  TempDir dir;
  std::vector<unsigned char> rec(3073, 0);
  rec[0] = 5;             // label
  rec[1] = 255;           // R plane (0,0)
  rec[1 + 1024] = 128;    // G plane (0,0)
  rec[1 + 2048 + 33] = 64;  // B plane (1,1)
  write_bytes(dir.path / "test_batch.bin", rec);

  Dataset d = load_cifar10(dir.str(), "test");
  CHECK(d.size() == 1);
  CHECK(d.labels[0] == 5);
  CHECK(d.images.at(0, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(d.images.at(0, 1, 0, 0) == doctest::Approx(128.0 / 255.0));
  CHECK(d.images.at(0, 2, 1, 1) == doctest::Approx(64.0 / 255.0));
  CHECK_NOTHROW(d.validate());

  SUBCASE("truncated record") {
    rec.pop_back();
    write_bytes(dir.path / "test_batch.bin", rec);
    CHECK_THROWS_AS(load_cifar10(dir.str(), "test"), FormatError);
  }
  SUBCASE("no train batches") {
    CHECK_THROWS_AS(load_cifar10(dir.str(), "train"), FormatError);
  }
}

TEST_CASE("resample") {
  Dataset d;
  d.name = "toy";
  d.class_count = 1;
  d.labels = {0};
  d.images = RealTensor4(Shape4{1, 1, 32, 32});

  SUBCASE("native side is identity") {
    for (std::size_t i = 0; i < d.images.size(); ++i)
      d.images.data()[i] = (i % 7) / 7.0;
    Dataset r = resample(d, 32);
    CHECK(r.images.vec() == d.images.vec());
  }
  SUBCASE("constant image survives downsampling") {
    d.images = RealTensor4(Shape4{1, 1, 32, 32}, 0.25);
    Dataset r = resample(d, 16);
    CHECK(r.images.shape() == Shape4{1, 1, 16, 16});
    for (double v : r.images.vec()) CHECK(v == doctest::Approx(0.25));
  }
  SUBCASE("checkerboard averages to gray") {
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) d.images.at(0, 0, y, x) = (y + x) % 2;
    Dataset r = resample(d, 16);
    for (double v : r.images.vec()) CHECK(v == doctest::Approx(0.5));
  }
  SUBCASE("zero-insertion upsample") {
    d.images = RealTensor4(Shape4{1, 1, 2, 2});
    d.images.at(0, 0, 1, 1) = 0.75;
    Dataset r = resample(d, 4);
    CHECK(r.images.at(0, 0, 2, 2) == 0.75);
    double sum = 0.0;
    for (double v : r.images.vec()) sum += v;
    CHECK(sum == 0.75);  // everything else zero
  }
  SUBCASE("invalid side") {
    CHECK_THROWS_AS(resample(d, 12), ConfigError);
    CHECK_THROWS_AS(resample(d, 0), ConfigError);
  }
}

TEST_CASE("synthetic cifar writer") {
  TempDir dir;
  write_synthetic_cifar(dir.str(), 64, 32, 9);
  Dataset train = load_cifar10(dir.str(), "train");
  Dataset test = load_cifar10(dir.str(), "test");
  CHECK(train.size() == 64);
  CHECK(test.size() == 32);
  CHECK_NOTHROW(train.validate());
  CHECK_NOTHROW(test.validate());
  // more than one class present
  bool varied = false;
  for (int l : train.labels) varied = varied || l != train.labels[0];
  CHECK(varied);
  // deterministic in the seed
  TempDir dir2;
  write_synthetic_cifar(dir2.str(), 64, 32, 9);
  Dataset again = load_cifar10(dir2.str(), "train");
  CHECK(again.images.vec() == train.images.vec());
  CHECK(again.labels == train.labels);
}
