#include "sclc/network.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sclc/rng.hpp"

namespace sclc {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::SpatialConv: return "spatial_conv";
    case LayerKind::SpectralConv: return "spectral_conv";
    case LayerKind::MaxPool: return "max_pool";
    case LayerKind::SpectralPool: return "spectral_pool";
    case LayerKind::Pointwise: return "pointwise";
    case LayerKind::Dense: return "dense";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::ToSpectral: return "to_spectral";
    case LayerKind::ToSpatial: return "to_spatial";
    case LayerKind::Scale: return "scale";
  }
  return "?";
}

LayerSpec LayerSpec::spatial_conv(int c_in, int c_out, int k) {
  LayerSpec l;
  l.kind = LayerKind::SpatialConv;
  l.in_channels = c_in;
  l.out_channels = c_out;
  l.kernel = k;
  return l;
}
LayerSpec LayerSpec::spectral_conv(int c_in, int c_out, int k) {
  LayerSpec l = spatial_conv(c_in, c_out, k);
  l.kind = LayerKind::SpectralConv;
  return l;
}
LayerSpec LayerSpec::max_pool(int k) {
  LayerSpec l;
  l.kind = LayerKind::MaxPool;
  l.pool = k;
  return l;
}
LayerSpec LayerSpec::spectral_pool(int h, int w) {
  LayerSpec l;
  l.kind = LayerKind::SpectralPool;
  l.out_h = h;
  l.out_w = w;
  return l;
}
LayerSpec LayerSpec::pointwise(PointwiseKind fn) {
  LayerSpec l;
  l.kind = LayerKind::Pointwise;
  l.fn = fn;
  return l;
}
LayerSpec LayerSpec::dense(int in, int out) {
  LayerSpec l;
  l.kind = LayerKind::Dense;
  l.dense_in = in;
  l.dense_out = out;
  return l;
}
LayerSpec LayerSpec::flatten() {
  LayerSpec l;
  l.kind = LayerKind::Flatten;
  return l;
}
LayerSpec LayerSpec::to_spectral() {
  LayerSpec l;
  l.kind = LayerKind::ToSpectral;
  return l;
}
LayerSpec LayerSpec::to_spatial() {
  LayerSpec l;
  l.kind = LayerKind::ToSpatial;
  return l;
}
LayerSpec LayerSpec::scaled(double factor) {
  LayerSpec l;
  l.kind = LayerKind::Scale;
  l.factor = factor;
  return l;
}

static bool is_learnable(const LayerSpec& l) {
  return l.kind == LayerKind::SpatialConv || l.kind == LayerKind::SpectralConv ||
         l.kind == LayerKind::Dense;
}

void finalize_names(NetworkSpec& spec) {
  int conv = 0, dense = 0;
  for (auto& l : spec.layers) {
    if (!is_learnable(l) || !l.name.empty()) continue;
    if (l.kind == LayerKind::Dense) {
      l.name = "dense" + std::to_string(dense++);
    } else {
      l.name = "conv" + std::to_string(conv++);
    }
  }
}

// --- Shape propagation ------------------------------------------------------

std::vector<ActShape> check_shapes(const NetworkSpec& spec) {
  spec.input_shape.validate();
  ActShape cur{spec.input_shape, ActDomain::Spatial};
  std::vector<ActShape> out;
  out.reserve(spec.layers.size());
  int li = 0;
  auto fail = [&](const std::string& why) {
    throw ShapeError("layer " + std::to_string(li) + " (" +
                     layer_kind_name(spec.layers[li].kind) + "): " + why);
  };
  for (li = 0; li < static_cast<int>(spec.layers.size()); ++li) {
    const LayerSpec& l = spec.layers[li];
    Shape4& s = cur.shape;
    switch (l.kind) {
      case LayerKind::SpatialConv:
        if (cur.domain != ActDomain::Spatial) fail("needs a spatial input");
        if (s.c != l.in_channels) fail("channel mismatch");
        if (l.kernel > s.h || l.kernel > s.w) fail("kernel larger than plane");
        s.c = l.out_channels;
        break;
      case LayerKind::SpectralConv:
        if (cur.domain != ActDomain::Spectral) fail("needs a spectral input");
        if (s.c != l.in_channels) fail("channel mismatch");
        if (l.kernel > s.h || l.kernel > s.w) fail("kernel larger than plane");
        s.c = l.out_channels;
        break;
      case LayerKind::MaxPool:
        if (cur.domain != ActDomain::Spatial) fail("needs a spatial input");
        if (l.pool < 1 || l.pool > s.h || l.pool > s.w) fail("window does not fit");
        s.h = (s.h - l.pool) / l.pool + 1;
        s.w = (s.w - l.pool) / l.pool + 1;
        break;
      case LayerKind::SpectralPool:
        if (cur.domain == ActDomain::Flat) fail("needs a 4D input");
        if (l.out_h < 1 || l.out_h > s.h || l.out_w < 1 || l.out_w > s.w)
          fail("invalid crop size");
        s.h = l.out_h;
        s.w = l.out_w;
        break;
      case LayerKind::Pointwise:
      case LayerKind::Scale:
        if (cur.domain == ActDomain::Spectral && l.kind == LayerKind::Pointwise)
          fail("pointwise nonlinearity on a spectral activation");
        break;
      case LayerKind::Dense:
        if (cur.domain != ActDomain::Flat) fail("needs a flattened input");
        if (s.w != l.dense_in) fail("dense input dim mismatch");
        s.w = l.dense_out;
        break;
      case LayerKind::Flatten:
        if (cur.domain != ActDomain::Spatial) fail("needs a spatial input");
        s = Shape4{s.s, 1, 1, s.c * s.h * s.w};
        cur.domain = ActDomain::Flat;
        break;
      case LayerKind::ToSpectral:
        if (cur.domain != ActDomain::Spatial) fail("needs a spatial input");
        cur.domain = ActDomain::Spectral;
        break;
      case LayerKind::ToSpatial:
        if (cur.domain != ActDomain::Spectral) fail("needs a spectral input");
        cur.domain = ActDomain::Spatial;
        break;
    }
    out.push_back(cur);
  }
  if (spec.class_count > 0) {
    if (out.empty() || out.back().domain != ActDomain::Flat ||
        out.back().shape.w != spec.class_count) {
      throw ShapeError("network does not end in a " +
                       std::to_string(spec.class_count) + "-class logit vector");
    }
  }
  return out;
}

// --- Parameters ----------------------------------------------------------------

ParamStore init_params(const NetworkSpec& spec, std::uint64_t seed) {
  check_shapes(spec);
  Rng rng(seed);
  ParamStore store;
  // Accumulated amplitude gain of linear resizing ops; used to tame the
  // initial logits of spectral students (pooling under the unnormalized
  // forward convention amplifies by HW/(H'W')).
  double gain = 1.0;
  Shape4 cur = spec.input_shape;
  for (const auto& l : spec.layers) {
    switch (l.kind) {
      case LayerKind::SpectralPool:
        gain *= static_cast<double>(cur.h) * cur.w /
                (static_cast<double>(l.out_h) * l.out_w);
        cur.h = l.out_h;
        cur.w = l.out_w;
        break;
      case LayerKind::MaxPool:
        cur.h = (cur.h - l.pool) / l.pool + 1;
        cur.w = (cur.w - l.pool) / l.pool + 1;
        break;
      case LayerKind::Scale:
        gain *= std::abs(l.factor);
        break;
      case LayerKind::SpatialConv:
      case LayerKind::SpectralConv: {
        if (l.name.empty()) throw ConfigError("init_params: unnamed conv layer");
        const int fan_in = l.in_channels * l.kernel * l.kernel;
        const double bound = std::sqrt(6.0 / fan_in);
        RealTensor4 k(Shape4{l.out_channels, l.in_channels, l.kernel, l.kernel});
        for (std::size_t i = 0; i < k.size(); ++i)
          k.data()[i] = rng.uniform(-bound, bound);
        store.momentum[l.name]["kernel"] = RealTensor4(k.shape());
        store.params[l.name]["kernel"] = std::move(k);
        cur.c = l.out_channels;
        break;
      }
      case LayerKind::Dense: {
        if (l.name.empty()) throw ConfigError("init_params: unnamed dense layer");
        const double bound = std::sqrt(6.0 / l.dense_in) / gain;
        RealTensor4 w(Shape4{1, 1, l.dense_out, l.dense_in});
        for (std::size_t i = 0; i < w.size(); ++i)
          w.data()[i] = rng.uniform(-bound, bound);
        store.momentum[l.name]["weight"] = RealTensor4(w.shape());
        store.momentum[l.name]["bias"] = RealTensor4(Shape4{1, 1, 1, l.dense_out});
        store.params[l.name]["weight"] = std::move(w);
        store.params[l.name]["bias"] = RealTensor4(Shape4{1, 1, 1, l.dense_out});
        gain = 1.0;  // logits rescaled; later dense layers see O(1) inputs
        break;
      }
      default:
        break;
    }
  }
  return store;
}

void validate_params(const NetworkSpec& spec, const ParamStore& params) {
  std::size_t learnable = 0;
  for (const auto& l : spec.layers) {
    if (!is_learnable(l)) continue;
    ++learnable;
    auto it = params.params.find(l.name);
    if (it == params.params.end())
      throw FormatError("params missing entry for layer '" + l.name + "'");
    auto expect = [&](const std::string& key, Shape4 sh) {
      auto jt = it->second.find(key);
      if (jt == it->second.end())
        throw FormatError("params entry '" + l.name + "' missing tensor '" + key + "'");
      if (!(jt->second.shape() == sh))
        throw FormatError("params tensor '" + l.name + "." + key + "' has shape " +
                          jt->second.shape().str() + ", expected " + sh.str());
    };
    if (l.kind == LayerKind::Dense) {
      expect("weight", Shape4{1, 1, l.dense_out, l.dense_in});
      expect("bias", Shape4{1, 1, 1, l.dense_out});
    } else {
      expect("kernel", Shape4{l.out_channels, l.in_channels, l.kernel, l.kernel});
    }
  }
  if (params.params.size() != learnable)
    throw FormatError("params has " + std::to_string(params.params.size()) +
                      " entries, spec expects " + std::to_string(learnable));
}

namespace {

constexpr char kStoreMagic[4] = {'S', 'C', 'L', 'P'};
constexpr std::uint32_t kStoreVersion = 1;

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
  if (!in) throw FormatError("param store: truncated");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_named(std::ostream& out, const NamedTensors& ts) {
  put_u32(out, static_cast<std::uint32_t>(ts.size()));
  for (const auto& [key, tensor] : ts) {
    put_u32(out, static_cast<std::uint32_t>(key.size()));
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
    write_tensor(out, tensor);
  }
}

NamedTensors get_named(std::istream& in) {
  NamedTensors ts;
  const std::uint32_t n = get_u32(in);
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint32_t len = get_u32(in);
    if (len > 4096) throw FormatError("param store: implausible name length");
    std::string key(len, '\0');
    in.read(key.data(), len);
    if (!in) throw FormatError("param store: truncated name");
    ts.emplace(std::move(key), read_real_tensor(in));
  }
  return ts;
}

}  // namespace

void save_params(const ParamStore& params, const std::string& path) {
  std::ostringstream buf(std::ios::binary);
  buf.write(kStoreMagic, 4);
  put_u32(buf, kStoreVersion);
  put_u32(buf, static_cast<std::uint32_t>(params.params.size()));
  for (const auto& [name, tensors] : params.params) {
    put_u32(buf, static_cast<std::uint32_t>(name.size()));
    buf.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_named(buf, tensors);
    auto mit = params.momentum.find(name);
    put_named(buf, mit == params.momentum.end() ? NamedTensors{} : mit->second);
  }
  const std::string body = buf.str();
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
            static_cast<uInt>(body.size())));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("save_params: cannot open " + path);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  put_u32(out, crc);
}

ParamStore load_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("load_params: cannot open " + path);
  std::string all((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (all.size() < 16) throw FormatError("load_params: file too small");
  const std::string body = all.substr(0, all.size() - 4);
  std::istringstream tail(all.substr(all.size() - 4));
  const std::uint32_t stored_crc = get_u32(tail);
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(body.data()),
            static_cast<uInt>(body.size())));
  if (crc != stored_crc)
    throw FormatError("load_params: CRC mismatch (corrupt file)");

  std::istringstream buf(body, std::ios::binary);
  char magic[4];
  buf.read(magic, 4);
  if (!buf || std::memcmp(magic, kStoreMagic, 4) != 0)
    throw FormatError("load_params: bad magic");
  const std::uint32_t version = get_u32(buf);
  if (version != kStoreVersion)
    throw FormatError("load_params: unsupported version " + std::to_string(version));
  const std::uint32_t count = get_u32(buf);
  ParamStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = get_u32(buf);
    if (len > 4096) throw FormatError("load_params: implausible name length");
    std::string name(len, '\0');
    buf.read(name.data(), len);
    if (!buf) throw FormatError("load_params: truncated layer name");
    store.params[name] = get_named(buf);
    store.momentum[name] = get_named(buf);
  }
  return store;
}

// --- Linear-counterpart transform ------------------------------------------------

NetworkSpec linear_counterpart(const NetworkSpec& teacher, StudentVariant variant) {
  const std::vector<ActShape> shapes = check_shapes(teacher);
  const bool has_planar = [&] {
    for (const auto& l : teacher.layers)
      if (l.kind == LayerKind::SpatialConv || l.kind == LayerKind::MaxPool ||
          l.kind == LayerKind::Pointwise)
        return true;
    return false;
  }();

  NetworkSpec student;
  student.input_shape = teacher.input_shape;
  student.class_count = teacher.class_count;

  auto push = [&](LayerSpec l) {
    // collapse adjacent inverse domain converters
    if (!student.layers.empty()) {
      const LayerKind prev = student.layers.back().kind;
      if ((prev == LayerKind::ToSpectral && l.kind == LayerKind::ToSpatial) ||
          (prev == LayerKind::ToSpatial && l.kind == LayerKind::ToSpectral)) {
        student.layers.pop_back();
        return;
      }
    }
    student.layers.push_back(std::move(l));
  };

  if (has_planar) push(LayerSpec::to_spectral());

  Shape4 in = teacher.input_shape;
  for (std::size_t i = 0; i < teacher.layers.size(); ++i) {
    const LayerSpec& l = teacher.layers[i];
    switch (l.kind) {
      case LayerKind::SpatialConv: {
        LayerSpec conv = LayerSpec::spectral_conv(l.in_channels, l.out_channels,
                                                  l.kernel);
        conv.name = l.name;
        push(std::move(conv));
        break;
      }
      case LayerKind::Pointwise:
        if (l.fn == PointwiseKind::Relu) {
          if (variant == StudentVariant::Sq || variant == StudentVariant::SqNormalized) {
            push(LayerSpec::to_spatial());
            push(LayerSpec::pointwise(PointwiseKind::Square));
            push(LayerSpec::to_spectral());
          }
          // Sclc variants: the nonlinearity is excluded
        }
        break;
      case LayerKind::MaxPool: {
        const int oh = (in.h - l.pool) / l.pool + 1;
        const int ow = (in.w - l.pool) / l.pool + 1;
        if (variant == StudentVariant::SclcMaxPool) {
          push(LayerSpec::to_spatial());
          push(LayerSpec::max_pool(l.pool));
          push(LayerSpec::to_spectral());
        } else {
          push(LayerSpec::spectral_pool(oh, ow));
          // keep activation magnitudes comparable across variants; for the
          // linear variants this is a pure reparameterization (the factor
          // can be absorbed into the dense layer), for the square variant
          // it is the normalization that keeps the nonlinearity tame
          if (variant != StudentVariant::Sq) {
            push(LayerSpec::scaled(static_cast<double>(oh) * ow /
                                   (static_cast<double>(in.h) * in.w)));
          }
        }
        break;
      }
      case LayerKind::Flatten:
        push(LayerSpec::to_spatial());
        push(LayerSpec::flatten());
        break;
      case LayerKind::Dense:
        push(l);
        break;
      default:
        throw ConfigError(std::string("linear_counterpart: unsupported teacher "
                                      "layer kind ") +
                          layer_kind_name(l.kind));
    }
    in = shapes[i].shape;
  }
  check_shapes(student);
  return student;
}

// --- Execution ----------------------------------------------------------------------

namespace {

struct Exec {
  const NetworkSpec& spec;
  const ParamStore& params;

  const RealTensor4& param(const LayerSpec& l, const std::string& key) const {
    auto it = params.params.find(l.name);
    if (it == params.params.end())
      throw StateError("missing params for layer '" + l.name + "'");
    auto jt = it->second.find(key);
    if (jt == it->second.end())
      throw StateError("missing tensor '" + key + "' for layer '" + l.name + "'");
    return jt->second;
  }
};

const RealTensor4& as_real(const Activation& a, int li, const char* kind) {
  if (const auto* r = std::get_if<RealTensor4>(&a)) return *r;
  throw StateError("layer " + std::to_string(li) + " (" + kind +
                   "): expected a real activation");
}

const ComplexTensor4& as_complex(const Activation& a, int li, const char* kind) {
  if (const auto* c = std::get_if<ComplexTensor4>(&a)) return *c;
  throw StateError("layer " + std::to_string(li) + " (" + kind +
                   "): expected a spectral activation");
}

void check_finite(const Activation& a, int li, const LayerSpec& l) {
  const bool ok = std::holds_alternative<RealTensor4>(a)
                      ? std::get<RealTensor4>(a).all_finite()
                      : std::get<ComplexTensor4>(a).all_finite();
  if (!ok)
    throw NumericError("non-finite activation after layer " + std::to_string(li) +
                       " (" + layer_kind_name(l.kind) + ")");
}

RealTensor4 flatten_real(const RealTensor4& x) {
  const Shape4 s = x.shape();
  return RealTensor4(Shape4{s.s, 1, 1, s.c * s.h * s.w}, x.vec());
}

}  // namespace

RealTensor4 forward(const NetworkSpec& spec, const ParamStore& params,
                    const RealTensor4& batch, bool record_tape, Tape* tape) {
  if (!(Shape4{1, batch.shape().c, batch.shape().h, batch.shape().w} ==
        Shape4{1, spec.input_shape.c, spec.input_shape.h, spec.input_shape.w})) {
    throw ShapeError("forward: batch shape " + batch.shape().str() +
                     " does not match network input " + spec.input_shape.str());
  }
  Exec ex{spec, params};
  const int n_layers = static_cast<int>(spec.layers.size());
  if (record_tape && tape) {
    tape->inputs.clear();
    tape->inputs.reserve(n_layers);
    tape->argmax.assign(n_layers, {});
    tape->conv_layers.assign(n_layers, std::nullopt);
  }
  Activation cur = batch;
  for (int li = 0; li < n_layers; ++li) {
    const LayerSpec& l = spec.layers[li];
    const char* kn = layer_kind_name(l.kind);
    if (record_tape && tape) tape->inputs.push_back(cur);
    Activation next;
    switch (l.kind) {
      case LayerKind::SpatialConv:
        next = spatial_conv_forward(ex.param(l, "kernel"), as_real(cur, li, kn),
                                    ConvMode::ZeroPad);
        break;
      case LayerKind::SpectralConv: {
        const ComplexTensor4& X = as_complex(cur, li, kn);
        SpectralConvLayer layer(ex.param(l, "kernel"), X.shape().h, X.shape().w);
        next = layer.forward(X);
        if (record_tape && tape) tape->conv_layers[li] = std::move(layer);
        break;
      }
      case LayerKind::MaxPool: {
        auto res = max_pool_forward(as_real(cur, li, kn), l.pool);
        if (record_tape && tape) tape->argmax[li] = std::move(res.argmax);
        next = std::move(res.out);
        break;
      }
      case LayerKind::SpectralPool: {
        SpectralPoolLayer pool{l.out_h, l.out_w};
        if (std::holds_alternative<ComplexTensor4>(cur)) {
          next = spectral_pool_forward(pool, std::get<ComplexTensor4>(cur));
        } else {
          next = spectral_pool_forward(pool, std::get<RealTensor4>(cur));
        }
        break;
      }
      case LayerKind::Pointwise:
        next = pointwise(l.fn, as_real(cur, li, kn));
        break;
      case LayerKind::Dense:
        next = dense_forward(ex.param(l, "weight"), ex.param(l, "bias"),
                             as_real(cur, li, kn));
        break;
      case LayerKind::Flatten:
        next = flatten_real(as_real(cur, li, kn));
        break;
      case LayerKind::ToSpectral:
        next = fft2(as_real(cur, li, kn));
        break;
      case LayerKind::ToSpatial:
        next = real_part(ifft2(as_complex(cur, li, kn)));
        break;
      case LayerKind::Scale:
        if (std::holds_alternative<ComplexTensor4>(cur)) {
          next = scale(std::get<ComplexTensor4>(cur), l.factor);
        } else {
          next = scale(std::get<RealTensor4>(cur), l.factor);
        }
        break;
    }
    check_finite(next, li, l);
    cur = std::move(next);
  }
  const RealTensor4& logits = as_real(cur, n_layers - 1, "output");
  if (spec.class_count > 0 && logits.shape().w != spec.class_count) {
    throw ShapeError("forward: logits length " + std::to_string(logits.shape().w) +
                     " != class count " + std::to_string(spec.class_count));
  }
  if (record_tape && tape) tape->logits = logits;
  return logits;
}

ParamGrads backward(const NetworkSpec& spec, const ParamStore& params,
                    const Tape& tape, const RealTensor4& logit_grad) {
  if (tape.inputs.size() != spec.layers.size()) {
    throw StateError("backward: tape does not match network (did forward run "
                     "with record_tape?)");
  }
  Exec ex{spec, params};
  ParamGrads grads;
  Activation g = logit_grad;
  for (int li = static_cast<int>(spec.layers.size()) - 1; li >= 0; --li) {
    const LayerSpec& l = spec.layers[li];
    const char* kn = layer_kind_name(l.kind);
    const Activation& in = tape.inputs[li];
    switch (l.kind) {
      case LayerKind::SpatialConv: {
        auto bundle = spatial_conv_backward(ex.param(l, "kernel"),
                                            as_real(in, li, kn),
                                            as_real(g, li, kn), ConvMode::ZeroPad);
        grads[l.name] = std::move(bundle.param_grads);
        g = std::move(*bundle.input_grad);
        break;
      }
      case LayerKind::SpectralConv: {
        if (!tape.conv_layers[li])
          throw StateError("backward: tape missing spectral conv state");
        auto bundle = tape.conv_layers[li]->backward(as_complex(in, li, kn),
                                                     as_complex(g, li, kn));
        grads[l.name] = std::move(bundle.param_grads);
        g = std::move(*bundle.input_grad_c);
        break;
      }
      case LayerKind::MaxPool: {
        const RealTensor4& x = as_real(in, li, kn);
        g = max_pool_backward(tape.argmax[li], as_real(g, li, kn), x.shape(),
                              l.pool);
        break;
      }
      case LayerKind::SpectralPool: {
        SpectralPoolLayer pool{l.out_h, l.out_w};
        if (std::holds_alternative<ComplexTensor4>(in)) {
          const Shape4 s = std::get<ComplexTensor4>(in).shape();
          g = spectral_pool_backward(pool, as_complex(g, li, kn), s.h, s.w);
        } else {
          const Shape4 s = std::get<RealTensor4>(in).shape();
          g = spectral_pool_backward(pool, as_real(g, li, kn), s.h, s.w);
        }
        break;
      }
      case LayerKind::Pointwise:
        g = pointwise_grad(l.fn, as_real(in, li, kn), as_real(g, li, kn));
        break;
      case LayerKind::Dense: {
        auto bundle = dense_backward(ex.param(l, "weight"), ex.param(l, "bias"),
                                     as_real(in, li, kn), as_real(g, li, kn));
        grads[l.name] = std::move(bundle.param_grads);
        g = std::move(*bundle.input_grad);
        break;
      }
      case LayerKind::Flatten: {
        const Shape4 s = as_real(in, li, kn).shape();
        g = RealTensor4(s, as_real(g, li, kn).vec());
        break;
      }
      case LayerKind::ToSpectral: {
        // adjoint of the unnormalized forward FFT on a real input
        const ComplexTensor4& gc = as_complex(g, li, kn);
        const double n = static_cast<double>(gc.shape().h) * gc.shape().w;
        g = scale(real_part(ifft2(gc)), n);
        break;
      }
      case LayerKind::ToSpatial: {
        // adjoint of Re o ifft2
        const RealTensor4& gr = as_real(g, li, kn);
        const double n = static_cast<double>(gr.shape().h) * gr.shape().w;
        g = scale(fft2(gr), 1.0 / n);
        break;
      }
      case LayerKind::Scale:
        if (std::holds_alternative<ComplexTensor4>(g)) {
          g = scale(std::get<ComplexTensor4>(g), l.factor);
        } else {
          g = scale(std::get<RealTensor4>(g), l.factor);
        }
        break;
    }
  }
  return grads;
}

NetworkSpec mini_teacher_spec(Shape4 input_shape, int class_count) {
  input_shape.validate();
  if (input_shape.h % 8 != 0 || input_shape.w % 8 != 0) {
    throw ConfigError("mini_teacher_spec: input sides must be divisible by 8");
  }
  const int channels[3] = {16, 32, 64};
  const int kernels[3] = {5, 3, 3};
  NetworkSpec net;
  net.input_shape = input_shape;
  net.class_count = class_count;
  int c_in = input_shape.c;
  int plane = std::min(input_shape.h, input_shape.w);
  for (int b = 0; b < 3; ++b) {
    // Small inputs shrink below the nominal kernel; clamp to an odd size
    // that fits the plane so the same architecture spans the sweep.
    int k = std::min(kernels[b], plane);
    if (k % 2 == 0) --k;
    net.layers.push_back(LayerSpec::spatial_conv(c_in, channels[b], k));
    plane /= 2;
    net.layers.push_back(LayerSpec::pointwise(PointwiseKind::Relu));
    net.layers.push_back(LayerSpec::max_pool(2));
    c_in = channels[b];
  }
  net.layers.push_back(LayerSpec::flatten());
  net.layers.push_back(
      LayerSpec::dense(c_in * (input_shape.h / 8) * (input_shape.w / 8),
                       class_count));
  finalize_names(net);
  check_shapes(net);
  return net;
}

}  // namespace sclc
