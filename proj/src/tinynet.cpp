#include "dvis/tinynet.hpp"

#include <atomic>
#include <cmath>
#include <string>

#include "dvis/rng.hpp"

namespace dvis {

namespace {

std::uint64_t next_version() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

std::size_t count_params(const std::vector<LayerParams>& layers) {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight.data.size() + l.bias.data.size();
  return n;
}

template <class Layers>
auto& flat_param(Layers& layers, std::size_t i) {
  for (auto& l : layers) {
    if (i < l.weight.data.size()) return l.weight.data[i];
    i -= l.weight.data.size();
    if (i < l.bias.data.size()) return l.bias.data[i];
    i -= l.bias.data.size();
  }
  throw DimensionError("parameter index out of range");
}

// Range of output columns whose tap (ox * stride + k - pad) lands inside [0, n).
void valid_range(int out_n, int in_n, int stride, int k, int pad, int& lo, int& hi) {
  lo = 0;
  while (lo < out_n && lo * stride + k - pad < 0) ++lo;
  hi = out_n;
  while (hi > lo && (hi - 1) * stride + k - pad >= in_n) --hi;
}

void conv_forward(const LayerSpec& s, const LayerParams& p, const ImageGrid& in, ImageGrid& out) {
  const int k = s.kernel, pad = k / 2, st = s.stride;
  const int oh = in.height / st, ow = in.width / st;
  out = ImageGrid(oh, ow, s.out_channels, 0.0);
  for (int oc = 0; oc < s.out_channels; ++oc) {
    double* o = out.plane(oc);
    const double b = p.bias.data[oc];
    for (int i = 0; i < oh * ow; ++i) o[i] = b;
    for (int ic = 0; ic < s.in_channels; ++ic) {
      const double* src = in.plane(ic);
      for (int ky = 0; ky < k; ++ky) {
        int y_lo, y_hi;
        valid_range(oh, in.height, st, ky, pad, y_lo, y_hi);
        for (int kx = 0; kx < k; ++kx) {
          const double w = p.weight.data[((static_cast<std::size_t>(oc) * s.in_channels + ic) * k + ky) * k + kx];
          if (w == 0.0) continue;
          int x_lo, x_hi;
          valid_range(ow, in.width, st, kx, pad, x_lo, x_hi);
          for (int oy = y_lo; oy < y_hi; ++oy) {
            const double* row = src + static_cast<std::size_t>(oy * st + ky - pad) * in.width + (kx - pad);
            double* orow = o + static_cast<std::size_t>(oy) * ow;
            if (st == 1) {
              for (int ox = x_lo; ox < x_hi; ++ox) orow[ox] += w * row[ox];
            } else {
              for (int ox = x_lo; ox < x_hi; ++ox) orow[ox] += w * row[ox * st];
            }
          }
        }
      }
    }
  }
}

void conv_backward(const LayerSpec& s, const LayerParams& p, const ImageGrid& in, const ImageGrid& g,
                   LayerParams& gp, ImageGrid& gin) {
  const int k = s.kernel, pad = k / 2, st = s.stride;
  const int oh = g.height, ow = g.width;
  gin = ImageGrid(in.height, in.width, in.channels, 0.0);
  for (int oc = 0; oc < s.out_channels; ++oc) {
    const double* go = g.plane(oc);
    double bsum = 0.0;
    for (int i = 0; i < oh * ow; ++i) bsum += go[i];
    gp.bias.data[oc] = bsum;
    for (int ic = 0; ic < s.in_channels; ++ic) {
      const double* src = in.plane(ic);
      double* dst = gin.plane(ic);
      for (int ky = 0; ky < k; ++ky) {
        int y_lo, y_hi;
        valid_range(oh, in.height, st, ky, pad, y_lo, y_hi);
        for (int kx = 0; kx < k; ++kx) {
          const std::size_t widx = ((static_cast<std::size_t>(oc) * s.in_channels + ic) * k + ky) * k + kx;
          const double w = p.weight.data[widx];
          int x_lo, x_hi;
          valid_range(ow, in.width, st, kx, pad, x_lo, x_hi);
          double acc = 0.0;
          for (int oy = y_lo; oy < y_hi; ++oy) {
            const std::size_t off = static_cast<std::size_t>(oy * st + ky - pad) * in.width + (kx - pad);
            const double* row = src + off;
            double* drow = dst + off;
            const double* grow = go + static_cast<std::size_t>(oy) * ow;
            if (st == 1) {
              for (int ox = x_lo; ox < x_hi; ++ox) {
                acc += grow[ox] * row[ox];
                drow[ox] += w * grow[ox];
              }
            } else {
              for (int ox = x_lo; ox < x_hi; ++ox) {
                acc += grow[ox] * row[ox * st];
                drow[ox * st] += w * grow[ox];
              }
            }
          }
          gp.weight.data[widx] = acc;
        }
      }
    }
  }
}

}  // namespace

Tensor::Tensor(std::vector<int> s, double fill) : shape(std::move(s)) {
  if (shape.empty()) return;  // rank 0 means "no tensor"
  std::size_t n = 1;
  for (int d : shape) n *= static_cast<std::size_t>(d);
  data.assign(n, fill);
}

int NetConfig::downsample_factor() const {
  int num = 1, den = 1;
  for (const auto& l : layers) {
    if (l.kind == LayerKind::conv) num *= l.stride;
    if (l.kind == LayerKind::upsample) den *= l.factor;
  }
  if (num % den != 0) throw DomainError("network upsampling exceeds its downsampling");
  return num / den;
}

int NetConfig::output_channels() const {
  int c = input_channels;
  for (const auto& l : layers)
    if (l.kind == LayerKind::conv) c = l.out_channels;
  return c;
}

void NetConfig::validate() const {
  if (input_channels < 1) throw DomainError("input_channels must be >= 1");
  if (layers.empty()) throw DomainError("network has no layers");
  int c = input_channels;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    const std::string where = "layer " + std::to_string(i);
    switch (l.kind) {
      case LayerKind::conv:
        if (l.in_channels != c) throw DimensionError(where + ": expected " + std::to_string(c) + " input channels");
        if (l.out_channels < 1 || l.kernel < 1 || l.kernel % 2 == 0 || l.stride < 1)
          throw DomainError(where + ": conv needs odd kernel and positive channels/stride");
        c = l.out_channels;
        break;
      case LayerKind::upsample:
        if (l.factor < 1) throw DomainError(where + ": upsample factor must be >= 1");
        break;
      case LayerKind::relu:
      case LayerKind::global_avg_pool:
        break;
    }
  }
  if (downsample_factor() < 1) throw DomainError("downsample factor must be >= 1");
}

void NetConfig::validate_segmentation() const {
  validate();
  if (output_channels() != 1) throw DomainError("segmentation network must output one channel");
  if (layers.back().kind != LayerKind::relu) throw DomainError("segmentation network must end with a ReLU");
  for (const auto& l : layers)
    if (l.kind == LayerKind::global_avg_pool) throw DomainError("segmentation network cannot pool globally");
}

NetConfig NetConfig::segmentation_default(int input_channels, std::uint64_t seed) {
  NetConfig cfg;
  cfg.input_channels = input_channels;
  cfg.init_seed = seed;
  cfg.input_offset = 0.5;
  const int widths[] = {16, 32, 32, 32, 16, 1};
  int c = input_channels;
  for (int i = 0; i < 6; ++i) {
    cfg.layers.push_back(LayerSpec::conv(c, widths[i], 3, i == 1 ? 2 : 1));
    cfg.layers.push_back(LayerSpec::relu());
    c = widths[i];
  }
  return cfg;
}

std::size_t ParamSet::parameter_count() const { return count_params(layers); }
double& ParamSet::parameter(std::size_t i) { return flat_param(layers, i); }
double ParamSet::parameter(std::size_t i) const { return flat_param(layers, i); }
void ParamSet::touch() { version = next_version(); }

std::size_t Gradients::parameter_count() const { return count_params(layers); }
double Gradients::parameter(std::size_t i) const { return flat_param(layers, i); }

ParamSet init(const NetConfig& cfg) {
  cfg.validate();
  ParamSet p;
  p.config = cfg;
  Rng rng(cfg.init_seed);
  for (const auto& l : cfg.layers) {
    LayerParams lp;
    if (l.kind == LayerKind::conv) {
      lp.weight = Tensor({l.out_channels, l.in_channels, l.kernel, l.kernel});
      lp.bias = Tensor({l.out_channels});
      const double std_dev = std::sqrt(2.0 / (static_cast<double>(l.in_channels) * l.kernel * l.kernel));
      for (double& w : lp.weight.data) w = std_dev * rng.normal();
    }
    p.layers.push_back(std::move(lp));
  }
  p.touch();
  return p;
}

ForwardResult forward(const ParamSet& params, const ImageGrid& image) {
  const NetConfig& cfg = params.config;
  if (image.channels != cfg.input_channels)
    throw DimensionError("image has " + std::to_string(image.channels) + " channels, network expects " +
                         std::to_string(cfg.input_channels));
  ForwardResult r;
  r.tape.version = params.version;
  r.tape.inputs.reserve(cfg.layers.size());
  ImageGrid cur = image;
  if (cfg.input_offset != 0.0)
    for (double& v : cur.data) v -= cfg.input_offset;
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    const auto& l = cfg.layers[i];
    ImageGrid next;
    switch (l.kind) {
      case LayerKind::conv:
        if (cur.height % l.stride != 0 || cur.width % l.stride != 0)
          throw DimensionError("layer " + std::to_string(i) + ": input " + std::to_string(cur.height) + "x" +
                               std::to_string(cur.width) + " not divisible by stride");
        conv_forward(l, params.layers[i], cur, next);
        break;
      case LayerKind::relu:
        next = cur;
        for (double& v : next.data) v = v > 0.0 ? v : 0.0;
        break;
      case LayerKind::upsample:
        next = ImageGrid(cur.height * l.factor, cur.width * l.factor, cur.channels);
        for (int c = 0; c < cur.channels; ++c)
          for (int y = 0; y < next.height; ++y)
            for (int x = 0; x < next.width; ++x) next.at(c, y, x) = cur.at(c, y / l.factor, x / l.factor);
        break;
      case LayerKind::global_avg_pool: {
        next = ImageGrid(1, 1, cur.channels);
        const std::size_t n = static_cast<std::size_t>(cur.height) * cur.width;
        for (int c = 0; c < cur.channels; ++c) {
          const double* src = cur.plane(c);
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += src[j];
          next.data[c] = s / static_cast<double>(n);
        }
        break;
      }
    }
    r.tape.inputs.push_back(std::move(cur));
    cur = std::move(next);
  }
  r.tape.output_height = cur.height;
  r.tape.output_width = cur.width;
  r.tape.output_channels = cur.channels;
  r.output = std::move(cur);
  return r;
}

Gradients backward(const ParamSet& params, const Tape& tape, const ImageGrid& grad_output) {
  const NetConfig& cfg = params.config;
  if (tape.version != params.version || tape.inputs.size() != cfg.layers.size())
    throw NumericError("stale tape: parameters changed since the forward pass");
  if (grad_output.height != tape.output_height || grad_output.width != tape.output_width ||
      grad_output.channels != tape.output_channels)
    throw DimensionError("output gradient does not match the forward output");

  Gradients g;
  g.layers.resize(cfg.layers.size());
  ImageGrid cur = grad_output;
  for (std::size_t idx = cfg.layers.size(); idx-- > 0;) {
    const auto& l = cfg.layers[idx];
    const ImageGrid& in = tape.inputs[idx];
    ImageGrid prev;
    switch (l.kind) {
      case LayerKind::conv: {
        LayerParams gp;
        gp.weight = Tensor(params.layers[idx].weight.shape);
        gp.bias = Tensor(params.layers[idx].bias.shape);
        conv_backward(l, params.layers[idx], in, cur, gp, prev);
        g.layers[idx] = std::move(gp);
        break;
      }
      case LayerKind::relu:
        prev = std::move(cur);
        for (std::size_t j = 0; j < prev.data.size(); ++j)
          if (!(in.data[j] > 0.0)) prev.data[j] = 0.0;
        break;
      case LayerKind::upsample:
        prev = ImageGrid(in.height, in.width, in.channels, 0.0);
        for (int c = 0; c < cur.channels; ++c)
          for (int y = 0; y < cur.height; ++y)
            for (int x = 0; x < cur.width; ++x) prev.at(c, y / l.factor, x / l.factor) += cur.at(c, y, x);
        break;
      case LayerKind::global_avg_pool: {
        prev = ImageGrid(in.height, in.width, in.channels, 0.0);
        const std::size_t n = static_cast<std::size_t>(in.height) * in.width;
        for (int c = 0; c < in.channels; ++c) {
          const double v = cur.data[c] / static_cast<double>(n);
          double* dst = prev.plane(c);
          for (std::size_t j = 0; j < n; ++j) dst[j] = v;
        }
        break;
      }
    }
    cur = std::move(prev);
  }
  return g;
}

void accumulate(Gradients& acc, const Gradients& g, double scale) {
  if (acc.layers.empty()) {
    acc.layers.resize(g.layers.size());
    for (std::size_t i = 0; i < g.layers.size(); ++i)
      acc.layers[i] = {Tensor(g.layers[i].weight.shape), Tensor(g.layers[i].bias.shape)};
  }
  if (acc.layers.size() != g.layers.size()) throw DimensionError("gradient layouts differ");
  for (std::size_t i = 0; i < acc.layers.size(); ++i) {
    auto& a = acc.layers[i];
    const auto& b = g.layers[i];
    for (std::size_t j = 0; j < a.weight.data.size(); ++j) a.weight.data[j] += scale * b.weight.data[j];
    for (std::size_t j = 0; j < a.bias.data.size(); ++j) a.bias.data[j] += scale * b.bias.data[j];
  }
}

void clip_gradients(Gradients& g, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (const auto& l : g.layers) {
    for (double v : l.weight.data) sq += v * v;
    for (double v : l.bias.data) sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (!(norm > max_norm)) return;
  const double s = max_norm / norm;
  for (auto& l : g.layers) {
    for (double& v : l.weight.data) v *= s;
    for (double& v : l.bias.data) v *= s;
  }
}

OptState make_opt_state(const ParamSet& params, double learning_rate, double momentum, double weight_decay) {
  if (!(learning_rate > 0.0)) throw DomainError("learning rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) throw DomainError("momentum must be in [0, 1)");
  if (weight_decay < 0.0) throw DomainError("weight decay must be >= 0");
  OptState s{learning_rate, momentum, weight_decay, {}};
  for (const auto& l : params.layers) s.buffers.push_back({Tensor(l.weight.shape), Tensor(l.bias.shape)});
  return s;
}

void sgd_step(ParamSet& params, const Gradients& grads, OptState& opt) {
  if (grads.layers.size() != params.layers.size() || opt.buffers.size() != params.layers.size())
    throw DimensionError("gradient / optimizer state does not match the parameters");
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    const auto& p = params.layers[i];
    const auto& g = grads.layers[i];
    if (g.weight.data.size() != p.weight.data.size() || g.bias.data.size() != p.bias.data.size())
      throw DimensionError("gradient shape mismatch at layer " + std::to_string(i));
    for (double v : g.weight.data)
      if (!std::isfinite(v)) throw NumericError("non-finite weight gradient at layer " + std::to_string(i));
    for (double v : g.bias.data)
      if (!std::isfinite(v)) throw NumericError("non-finite bias gradient at layer " + std::to_string(i));
  }
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& p = params.layers[i];
    const auto& g = grads.layers[i];
    auto& b = opt.buffers[i];
    for (std::size_t j = 0; j < p.weight.data.size(); ++j) {
      b.weight.data[j] = opt.momentum * b.weight.data[j] + g.weight.data[j] + opt.weight_decay * p.weight.data[j];
      p.weight.data[j] -= opt.learning_rate * b.weight.data[j];
    }
    for (std::size_t j = 0; j < p.bias.data.size(); ++j) {
      b.bias.data[j] = opt.momentum * b.bias.data[j] + g.bias.data[j];
      p.bias.data[j] -= opt.learning_rate * b.bias.data[j];
    }
  }
  params.touch();
}

}  // namespace dvis
