#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "sclc/layers.hpp"
#include "sclc/tensor.hpp"

namespace sclc {

enum class LayerKind {
  SpatialConv,   // teacher zero-padded same-size convolution
  SpectralConv,  // elementwise product in the frequency domain
  MaxPool,
  SpectralPool,
  Pointwise,
  Dense,
  Flatten,
  ToSpectral,  // fft2 of a real activation
  ToSpatial,   // ifft2 + real part
  Scale,       // fixed multiplicative factor (activation normalization)
};

const char* layer_kind_name(LayerKind k);

struct LayerSpec {
  LayerKind kind{};
  // convolutions
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 0;
  // max pool (window == stride)
  int pool = 0;
  // spectral pool target
  int out_h = 0;
  int out_w = 0;
  // pointwise
  PointwiseKind fn = PointwiseKind::Identity;
  // dense
  int dense_in = 0;
  int dense_out = 0;
  // scale
  double factor = 1.0;
  // parameter key; assigned by finalize_names when empty
  std::string name;

  static LayerSpec spatial_conv(int c_in, int c_out, int k);
  static LayerSpec spectral_conv(int c_in, int c_out, int k);
  static LayerSpec max_pool(int k);
  static LayerSpec spectral_pool(int h, int w);
  static LayerSpec pointwise(PointwiseKind fn);
  static LayerSpec dense(int in, int out);
  static LayerSpec flatten();
  static LayerSpec to_spectral();
  static LayerSpec to_spatial();
  static LayerSpec scaled(double factor);
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  Shape4 input_shape;  // batch dim is free
  int class_count = 0;
};

// Assigns stable names (conv0, dense0, ...) to learnable layers that lack one.
void finalize_names(NetworkSpec& spec);

// --- Shape propagation ------------------------------------------------------
enum class ActDomain { Spatial, Spectral, Flat };

struct ActShape {
  Shape4 shape;
  ActDomain domain = ActDomain::Spatial;
};

// Predicted output shape of every layer; throws ShapeError/ConfigError on an
// inconsistent spec (dimension mismatch, domain mismatch, unmatched
// to_spectral/to_spatial, missing final logits vector).
std::vector<ActShape> check_shapes(const NetworkSpec& spec);

// --- Parameters ----------------------------------------------------------------
using NamedTensors = std::map<std::string, RealTensor4>;
using ParamGrads = std::map<std::string, NamedTensors>;

struct ParamStore {
  std::map<std::string, NamedTensors> params;
  std::map<std::string, NamedTensors> momentum;
};

// He-style scaled uniform init, deterministic in the seed. The gain of the
// final dense layer is divided by the frontend's accumulated linear gain so
// initial logits stay O(1) for linear-counterpart students.
ParamStore init_params(const NetworkSpec& spec, std::uint64_t seed);

// Shape-checks a loaded store against a spec.
void validate_params(const NetworkSpec& spec, const ParamStore& params);

void save_params(const ParamStore& params, const std::string& path);
ParamStore load_params(const std::string& path);

// --- Linear-counterpart transform ------------------------------------------------
enum class StudentVariant {
  Sclc,          // relu removed, max pool -> spectral pool
  SclcMaxPool,   // relu removed, max pool kept (ablation row)
  Sq,            // relu -> square nonlinearity
  SqNormalized,  // square plus per-pool activation rescaling
};

NetworkSpec linear_counterpart(const NetworkSpec& teacher,
                               StudentVariant variant = StudentVariant::Sclc);

// --- Execution ----------------------------------------------------------------------
using Activation = std::variant<RealTensor4, ComplexTensor4>;

struct Tape {
  // Input activation of each layer, plus whatever the backward pass needs.
  std::vector<Activation> inputs;
  std::vector<std::vector<std::int32_t>> argmax;  // per layer; empty unless max pool
  // per layer; holds the layer (kernels + cached spectra) for spectral convs
  std::vector<std::optional<SpectralConvLayer>> conv_layers;
  RealTensor4 logits;
};

// Runs the network on a batch. record_tape retains everything backward needs.
// Throws NumericError naming the layer if an activation goes non-finite.
RealTensor4 forward(const NetworkSpec& spec, const ParamStore& params,
                    const RealTensor4& batch, bool record_tape, Tape* tape);

// Gradients for every learnable parameter given d(loss)/d(logits).
ParamGrads backward(const NetworkSpec& spec, const ParamStore& params,
                    const Tape& tape, const RealTensor4& logit_grad);

// The desk-scale teacher: three conv/relu/maxpool blocks (5x5 then 3x3
// kernels, channels 16/32/64) and a dense classifier.
NetworkSpec mini_teacher_spec(Shape4 input_shape, int class_count);

}  // namespace sclc
