#include "sclc/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

namespace sclc {

// --- SpectralConvLayer ----------------------------------------------------

SpectralConvLayer::SpectralConvLayer(RealTensor4 kernels, int input_h, int input_w)
    : kernels_(std::move(kernels)), in_h_(input_h), in_w_(input_w) {
  if (kernels_.shape().h > in_h_ || kernels_.shape().w > in_w_) {
    throw ShapeError("SpectralConvLayer: kernel " + kernels_.shape().str() +
                     " larger than input plane");
  }
}

void SpectralConvLayer::set_kernels(RealTensor4 kernels) {
  if (!(kernels.shape() == kernels_.shape())) {
    throw ShapeError("SpectralConvLayer::set_kernels: shape mismatch");
  }
  kernels_ = std::move(kernels);
  cached_spectra_.reset();
}

const ComplexTensor4& SpectralConvLayer::spectra() const {
  if (!cached_spectra_) {
    cached_spectra_ = fft2(pad_spatial(kernels_, in_h_, in_w_));
  }
  return *cached_spectra_;
}

ComplexTensor4 SpectralConvLayer::forward(const ComplexTensor4& X) const {
  const Shape4 xs = X.shape();
  const Shape4 ks = kernels_.shape();  // (C_out, C_in, k, k)
  if (xs.c != ks.c || xs.h != in_h_ || xs.w != in_w_) {
    throw ShapeError("spectral_conv_forward: input " + xs.str() +
                     " incompatible with kernels " + ks.str() + " at " +
                     std::to_string(in_h_) + "x" + std::to_string(in_w_));
  }
  const ComplexTensor4& K = spectra();
  ComplexTensor4 Y(Shape4{xs.s, ks.s, xs.h, xs.w});
  const std::size_t plane = xs.plane();
  for (int s = 0; s < xs.s; ++s)
    for (int co = 0; co < ks.s; ++co) {
      cplx* py = Y.data() + Y.index(s, co, 0, 0);
      for (int ci = 0; ci < ks.c; ++ci) {
        const cplx* px = X.data() + X.index(s, ci, 0, 0);
        const cplx* pk = K.data() + K.index(co, ci, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) py[i] += px[i] * pk[i];
      }
    }
  return Y;
}

GradBundle SpectralConvLayer::backward(const ComplexTensor4& X0,
                                       const ComplexTensor4& sigma_Y) const {
  const Shape4 xs = X0.shape();
  const Shape4 ks = kernels_.shape();
  const Shape4 ys = sigma_Y.shape();
  if (xs.c != ks.c || xs.h != in_h_ || xs.w != in_w_) {
    throw ShapeError("spectral_conv_backward: cached input shape " + xs.str());
  }
  if (ys.s != xs.s || ys.c != ks.s || ys.h != xs.h || ys.w != xs.w) {
    throw ShapeError("spectral_conv_backward: sigma_Y shape " + ys.str());
  }
  const ComplexTensor4& K = spectra();
  const std::size_t plane = xs.plane();

  ComplexTensor4 sigma_X(xs);
  ComplexTensor4 delta_K(Shape4{ks.s, ks.c, xs.h, xs.w});
  for (int s = 0; s < xs.s; ++s)
    for (int co = 0; co < ks.s; ++co) {
      const cplx* py = sigma_Y.data() + sigma_Y.index(s, co, 0, 0);
      for (int ci = 0; ci < ks.c; ++ci) {
        cplx* psx = sigma_X.data() + sigma_X.index(s, ci, 0, 0);
        cplx* pdk = delta_K.data() + delta_K.index(co, ci, 0, 0);
        const cplx* pk = K.data() + K.index(co, ci, 0, 0);
        const cplx* px = X0.data() + X0.index(s, ci, 0, 0);
        for (std::size_t i = 0; i < plane; ++i) {
          psx[i] += py[i] * std::conj(pk[i]);
          pdk[i] += py[i] * std::conj(px[i]);
        }
      }
    }

  // Spatial kernel gradient: adjoint of fft2 o pad_spatial. The adjoint of the
  // unnormalized forward FFT carries an H*W factor relative to ifft2.
  RealTensor4 full = scale(real_part(ifft2(delta_K)),
                           static_cast<double>(xs.h) * xs.w);
  RealTensor4 kgrad(ks);
  for (int co = 0; co < ks.s; ++co)
    for (int ci = 0; ci < ks.c; ++ci)
      for (int y = 0; y < ks.h; ++y)
        for (int x = 0; x < ks.w; ++x)
          kgrad.at(co, ci, y, x) = full.at(co, ci, y, x);

  GradBundle out;
  out.input_grad_c = std::move(sigma_X);
  out.param_grads.emplace("kernel", std::move(kgrad));
  return out;
}

// --- Spatial convolution ----------------------------------------------------

namespace {

void check_conv_shapes(const Shape4& ks, const Shape4& xs) {
  if (ks.c != xs.c) {
    throw ShapeError("spatial_conv: kernel channels " + ks.str() +
                     " vs input " + xs.str());
  }
  if (ks.h > xs.h || ks.w > xs.w) {
    throw ShapeError("spatial_conv: kernel " + ks.str() + " larger than image " +
                     xs.str());
  }
}

}  // namespace

RealTensor4 spatial_conv_forward(const RealTensor4& k, const RealTensor4& x,
                                 ConvMode mode) {
  const Shape4 ks = k.shape();
  const Shape4 xs = x.shape();
  check_conv_shapes(ks, xs);
  RealTensor4 out(Shape4{xs.s, ks.s, xs.h, xs.w});
  const int py = (mode == ConvMode::ZeroPad) ? ks.h / 2 : 0;
  const int px = (mode == ConvMode::ZeroPad) ? ks.w / 2 : 0;
  for (int s = 0; s < xs.s; ++s)
    for (int co = 0; co < ks.s; ++co) {
      double* po = out.data() + out.index(s, co, 0, 0);
      for (int ci = 0; ci < xs.c; ++ci) {
        const double* pi = x.data() + x.index(s, ci, 0, 0);
        for (int dy = 0; dy < ks.h; ++dy)
          for (int dx = 0; dx < ks.w; ++dx) {
            const double kv = k.at(co, ci, dy, dx);
            if (mode == ConvMode::Circular) {
              for (int i = 0; i < xs.h; ++i) {
                const int yy = ((i - dy) % xs.h + xs.h) % xs.h;
                const double* row = pi + static_cast<std::size_t>(yy) * xs.w;
                double* orow = po + static_cast<std::size_t>(i) * xs.w;
                // split the wrapped row into its two contiguous runs
                for (int j = 0; j < dx; ++j) orow[j] += kv * row[xs.w - dx + j];
                for (int j = dx; j < xs.w; ++j) orow[j] += kv * row[j - dx];
              }
            } else {
              // y[i,j] += kv * x[i - dy + py, j - dx + px], zero outside
              const int ylo = std::max(0, dy - py);
              const int yhi = std::min(xs.h, xs.h + dy - py);
              const int jlo = std::max(0, dx - px);
              const int jhi = std::min(xs.w, xs.w + dx - px);
              for (int i = ylo; i < yhi; ++i) {
                const double* row = pi + static_cast<std::size_t>(i - dy + py) * xs.w;
                double* orow = po + static_cast<std::size_t>(i) * xs.w;
                for (int j = jlo; j < jhi; ++j) orow[j] += kv * row[j - dx + px];
              }
            }
          }
      }
    }
  return out;
}

GradBundle spatial_conv_backward(const RealTensor4& k, const RealTensor4& x,
                                 const RealTensor4& g, ConvMode mode) {
  const Shape4 ks = k.shape();
  const Shape4 xs = x.shape();
  check_conv_shapes(ks, xs);
  if (!(g.shape() == Shape4{xs.s, ks.s, xs.h, xs.w})) {
    throw ShapeError("spatial_conv_backward: upstream grad shape " +
                     g.shape().str());
  }
  const int py = (mode == ConvMode::ZeroPad) ? ks.h / 2 : 0;
  const int px = (mode == ConvMode::ZeroPad) ? ks.w / 2 : 0;
  RealTensor4 xgrad(xs);
  RealTensor4 kgrad(ks);
  for (int s = 0; s < xs.s; ++s)
    for (int co = 0; co < ks.s; ++co)
      for (int ci = 0; ci < xs.c; ++ci)
        for (int dy = 0; dy < ks.h; ++dy)
          for (int dx = 0; dx < ks.w; ++dx) {
            const double kv = k.at(co, ci, dy, dx);
            double kg = 0.0;
            for (int i = 0; i < xs.h; ++i)
              for (int j = 0; j < xs.w; ++j) {
                int yy = i - dy + py;
                int xx = j - dx + px;
                if (mode == ConvMode::Circular) {
                  yy = (yy % xs.h + xs.h) % xs.h;
                  xx = (xx % xs.w + xs.w) % xs.w;
                } else if (yy < 0 || yy >= xs.h || xx < 0 || xx >= xs.w) {
                  continue;
                }
                const double gv = g.at(s, co, i, j);
                xgrad.at(s, ci, yy, xx) += gv * kv;
                kg += gv * x.at(s, ci, yy, xx);
              }
            kgrad.at(co, ci, dy, dx) += kg;
          }
  GradBundle out;
  out.input_grad = std::move(xgrad);
  out.param_grads.emplace("kernel", std::move(kgrad));
  return out;
}

// --- Spectral pooling --------------------------------------------------------

ComplexTensor4 spectral_pool_forward(const SpectralPoolLayer& layer,
                                     const ComplexTensor4& t) {
  return center_crop_freq(t, layer.out_h, layer.out_w);
}

ComplexTensor4 spectral_pool_backward(const SpectralPoolLayer& layer,
                                      const ComplexTensor4& g, int in_h, int in_w) {
  if (g.shape().h != layer.out_h || g.shape().w != layer.out_w) {
    throw ShapeError("spectral_pool_backward: grad shape " + g.shape().str());
  }
  return center_pad_freq(g, in_h, in_w);
}

RealTensor4 spectral_pool_forward(const SpectralPoolLayer& layer,
                                  const RealTensor4& t) {
  return real_part(ifft2(center_crop_freq(fft2(t), layer.out_h, layer.out_w)));
}

RealTensor4 spectral_pool_backward(const SpectralPoolLayer& layer,
                                   const RealTensor4& g, int in_h, int in_w) {
  if (g.shape().h != layer.out_h || g.shape().w != layer.out_w) {
    throw ShapeError("spectral_pool_backward: grad shape " + g.shape().str());
  }
  // Adjoint of Re(ifft2 o crop o fft2); the size change leaves a ratio of the
  // two plane areas between the transform normalizations.
  const double ratio = static_cast<double>(in_h) * in_w /
                       (static_cast<double>(layer.out_h) * layer.out_w);
  return scale(real_part(ifft2(center_pad_freq(fft2(g), in_h, in_w))), ratio);
}

// --- Max pooling --------------------------------------------------------------

MaxPoolResult max_pool_forward(const RealTensor4& x, int k, int stride) {
  if (stride == 0) stride = k;
  const Shape4 xs = x.shape();
  if (k < 1 || k > xs.h || k > xs.w) {
    throw ShapeError("max_pool_forward: window " + std::to_string(k) +
                     " does not fit " + xs.str());
  }
  const int oh = (xs.h - k) / stride + 1;
  const int ow = (xs.w - k) / stride + 1;
  MaxPoolResult res{RealTensor4(Shape4{xs.s, xs.c, oh, ow}), {}};
  res.argmax.resize(res.out.size());
  std::size_t oi = 0;
  for (int s = 0; s < xs.s; ++s)
    for (int c = 0; c < xs.c; ++c)
      for (int y = 0; y < oh; ++y)
        for (int xo = 0; xo < ow; ++xo, ++oi) {
          double best = -std::numeric_limits<double>::infinity();
          std::int32_t arg = 0;
          for (int dy = 0; dy < k; ++dy)
            for (int dx = 0; dx < k; ++dx) {
              const int yy = y * stride + dy;
              const int xx = xo * stride + dx;
              const double v = x.at(s, c, yy, xx);
              if (v > best) {  // first index wins ties
                best = v;
                arg = static_cast<std::int32_t>(yy * xs.w + xx);
              }
            }
          res.out.data()[oi] = best;
          res.argmax[oi] = arg;
        }
  return res;
}

RealTensor4 max_pool_backward(const std::vector<std::int32_t>& argmax,
                              const RealTensor4& g, const Shape4& input_shape,
                              int k, int stride) {
  if (stride == 0) stride = k;
  if (argmax.size() != g.size()) {
    throw ShapeError("max_pool_backward: argmax/grad size mismatch");
  }
  RealTensor4 out(input_shape);
  const Shape4 gs = g.shape();
  std::size_t oi = 0;
  for (int s = 0; s < gs.s; ++s)
    for (int c = 0; c < gs.c; ++c) {
      double* plane = out.data() + out.index(s, c, 0, 0);
      for (int y = 0; y < gs.h; ++y)
        for (int x = 0; x < gs.w; ++x, ++oi) plane[argmax[oi]] += g.data()[oi];
    }
  return out;
}

// --- Pointwise -----------------------------------------------------------------

RealTensor4 pointwise(PointwiseKind kind, const RealTensor4& x) {
  RealTensor4 out(x.shape());
  const double* px = x.data();
  double* po = out.data();
  switch (kind) {
    case PointwiseKind::Relu:
      for (std::size_t i = 0; i < x.size(); ++i) po[i] = px[i] > 0.0 ? px[i] : 0.0;
      break;
    case PointwiseKind::Square:
      for (std::size_t i = 0; i < x.size(); ++i) po[i] = px[i] * px[i];
      break;
    case PointwiseKind::Identity:
      out = x;
      break;
  }
  return out;
}

RealTensor4 pointwise_grad(PointwiseKind kind, const RealTensor4& x,
                           const RealTensor4& g) {
  if (!(x.shape() == g.shape())) {
    throw ShapeError("pointwise_grad: shape mismatch");
  }
  RealTensor4 out(x.shape());
  const double* px = x.data();
  const double* pg = g.data();
  double* po = out.data();
  switch (kind) {
    case PointwiseKind::Relu:
      for (std::size_t i = 0; i < x.size(); ++i) po[i] = px[i] > 0.0 ? pg[i] : 0.0;
      break;
    case PointwiseKind::Square:
      for (std::size_t i = 0; i < x.size(); ++i) po[i] = pg[i] * 2.0 * px[i];
      break;
    case PointwiseKind::Identity:
      out = g;
      break;
  }
  return out;
}

// --- Dense ------------------------------------------------------------------------

RealTensor4 dense_forward(const RealTensor4& Wm, const RealTensor4& b,
                          const RealTensor4& x) {
  const Shape4 ws = Wm.shape();
  const Shape4 xs = x.shape();
  const int n_out = ws.h, n_in = ws.w;
  if (xs.w != n_in || b.shape().w != n_out) {
    throw ShapeError("dense_forward: W " + ws.str() + ", b " + b.shape().str() +
                     ", x " + xs.str());
  }
  RealTensor4 out(Shape4{xs.s, 1, 1, n_out});
  for (int s = 0; s < xs.s; ++s) {
    const double* px = x.data() + x.index(s, 0, 0, 0);
    double* po = out.data() + out.index(s, 0, 0, 0);
    for (int o = 0; o < n_out; ++o) {
      const double* pw = Wm.data() + Wm.index(0, 0, o, 0);
      double acc = b.data()[o];
      for (int i = 0; i < n_in; ++i) acc += pw[i] * px[i];
      po[o] = acc;
    }
  }
  return out;
}

GradBundle dense_backward(const RealTensor4& Wm, const RealTensor4& b,
                          const RealTensor4& x, const RealTensor4& g) {
  const Shape4 ws = Wm.shape();
  const Shape4 xs = x.shape();
  const int n_out = ws.h, n_in = ws.w;
  if (xs.w != n_in || g.shape().w != n_out || g.shape().s != xs.s) {
    throw ShapeError("dense_backward: shape mismatch");
  }
  RealTensor4 xgrad(xs);
  RealTensor4 wgrad(ws);
  RealTensor4 bgrad(b.shape());
  for (int s = 0; s < xs.s; ++s) {
    const double* px = x.data() + x.index(s, 0, 0, 0);
    const double* pg = g.data() + g.index(s, 0, 0, 0);
    double* pxg = xgrad.data() + xgrad.index(s, 0, 0, 0);
    for (int o = 0; o < n_out; ++o) {
      const double gv = pg[o];
      const double* pw = Wm.data() + Wm.index(0, 0, o, 0);
      double* pwg = wgrad.data() + wgrad.index(0, 0, o, 0);
      bgrad.data()[o] += gv;
      for (int i = 0; i < n_in; ++i) {
        pxg[i] += gv * pw[i];
        pwg[i] += gv * px[i];
      }
    }
  }
  GradBundle out;
  out.input_grad = std::move(xgrad);
  out.param_grads.emplace("weight", std::move(wgrad));
  out.param_grads.emplace("bias", std::move(bgrad));
  return out;
}

}  // namespace sclc
