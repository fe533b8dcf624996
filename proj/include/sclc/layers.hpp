#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sclc/tensor.hpp"

namespace sclc {

// Gradients produced by a layer backward pass. Exactly one of the input
// grads is set, matching the domain of the layer's input.
struct GradBundle {
  std::optional<RealTensor4> input_grad;
  std::optional<ComplexTensor4> input_grad_c;
  std::map<std::string, RealTensor4> param_grads;
};

enum class ConvMode { Circular, ZeroPad };
enum class PoolDomain { Spatial, Spectral };
enum class PointwiseKind { Relu, Square, Identity };

// --- Spectral convolution ------------------------------------------------
// Kernels are stored spatially as (C_out, C_in, k, k); their padded FFTs are
// cached lazily and invalidated on every kernel update.
class SpectralConvLayer {
 public:
  SpectralConvLayer(RealTensor4 kernels, int input_h, int input_w);

  void set_kernels(RealTensor4 kernels);
  const RealTensor4& kernels() const { return kernels_; }
  int input_h() const { return in_h_; }
  int input_w() const { return in_w_; }
  const ComplexTensor4& spectra() const;  // fft2(pad_spatial(kernels, H, W))

  // Y[s, co] = sum_ci X[s, ci] . K[co, ci]
  ComplexTensor4 forward(const ComplexTensor4& X) const;

  // sigma_X[s, ci] = sum_co sigma_Y[s, co] . conj(K[co, ci])
  // delta_K[co, ci] = sum_s  sigma_Y[s, co] . conj(X0[s, ci])
  // Spatial kernel gradient: H*W * real(ifft2(delta_K)) on the k x k support.
  GradBundle backward(const ComplexTensor4& X0, const ComplexTensor4& sigma_Y) const;

 private:
  RealTensor4 kernels_;
  int in_h_;
  int in_w_;
  mutable std::optional<ComplexTensor4> cached_spectra_;
};

// --- Spatial convolution (teacher path and oracle) -----------------------
// True convolution (Eq. 3 index order). Circular mode wraps; ZeroPad keeps
// the output size with the kernel anchored at its center.
RealTensor4 spatial_conv_forward(const RealTensor4& k, const RealTensor4& x,
                                 ConvMode mode);
GradBundle spatial_conv_backward(const RealTensor4& k, const RealTensor4& x,
                                 const RealTensor4& g, ConvMode mode);

// --- Spectral pooling -----------------------------------------------------
struct SpectralPoolLayer {
  int out_h;
  int out_w;
};

// Spectral domain: pure centered crop / zero-pad adjoint.
ComplexTensor4 spectral_pool_forward(const SpectralPoolLayer& layer,
                                     const ComplexTensor4& t);
ComplexTensor4 spectral_pool_backward(const SpectralPoolLayer& layer,
                                      const ComplexTensor4& g, int in_h, int in_w);

// Spatial domain: fft2 -> crop -> ifft2 -> real part, and its true adjoint.
RealTensor4 spectral_pool_forward(const SpectralPoolLayer& layer,
                                  const RealTensor4& t);
RealTensor4 spectral_pool_backward(const SpectralPoolLayer& layer,
                                   const RealTensor4& g, int in_h, int in_w);

// --- Max pooling -----------------------------------------------------------
struct MaxPoolResult {
  RealTensor4 out;
  std::vector<std::int32_t> argmax;  // flat plane index per output element
};

MaxPoolResult max_pool_forward(const RealTensor4& x, int k, int stride = 0);
RealTensor4 max_pool_backward(const std::vector<std::int32_t>& argmax,
                              const RealTensor4& g, const Shape4& input_shape,
                              int k, int stride = 0);

// --- Pointwise nonlinearities ----------------------------------------------
RealTensor4 pointwise(PointwiseKind kind, const RealTensor4& x);
RealTensor4 pointwise_grad(PointwiseKind kind, const RealTensor4& x,
                           const RealTensor4& g);

// --- Dense layer -------------------------------------------------------------
// x: (S,1,1,in), Wm: (1,1,out,in), b: (1,1,1,out) -> (S,1,1,out)
RealTensor4 dense_forward(const RealTensor4& Wm, const RealTensor4& b,
                          const RealTensor4& x);
GradBundle dense_backward(const RealTensor4& Wm, const RealTensor4& b,
                          const RealTensor4& x, const RealTensor4& g);

}  // namespace sclc
