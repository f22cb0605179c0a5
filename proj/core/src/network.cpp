#include "ufkm/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "ufkm/error.hpp"

namespace ufkm {

// ---------------------------------------------------------------------------
// Layer descriptors and shape chain
// ---------------------------------------------------------------------------

LayerDesc LayerDesc::conv(std::size_t out_channels, std::size_t kernel, std::size_t stride,
                          std::size_t pad) {
    LayerDesc d;
    d.kind = LayerKind::Conv;
    d.out_channels = out_channels;
    d.kernel = kernel;
    d.stride = stride;
    d.pad = pad;
    return d;
}
LayerDesc LayerDesc::relu() {
    LayerDesc d;
    d.kind = LayerKind::Relu;
    return d;
}
LayerDesc LayerDesc::maxpool(std::size_t size, std::size_t stride) {
    LayerDesc d;
    d.kind = LayerKind::MaxPool;
    d.pool_size = size;
    d.pool_stride = stride;
    return d;
}
LayerDesc LayerDesc::flatten() {
    LayerDesc d;
    d.kind = LayerKind::Flatten;
    return d;
}
LayerDesc LayerDesc::fc(std::size_t out_dims) {
    LayerDesc d;
    d.kind = LayerKind::Fc;
    d.out_dims = out_dims;
    return d;
}
LayerDesc LayerDesc::dropout(double rate) {
    LayerDesc d;
    d.kind = LayerKind::Dropout;
    d.rate = rate;
    return d;
}

std::vector<Shape3> layer_output_shapes(const NetworkSpec& spec) {
    Shape3 cur{spec.in_channels, spec.in_h, spec.in_w};
    if (cur.count() == 0) throw ConfigError("network spec: empty input shape");
    bool flattened = false;
    std::vector<Shape3> out;
    out.reserve(spec.layers.size());
    for (const LayerDesc& l : spec.layers) {
        switch (l.kind) {
            case LayerKind::Conv: {
                if (flattened) throw ConfigError("network spec: conv after flatten");
                if (l.out_channels == 0 || l.kernel == 0 || l.stride == 0)
                    throw ConfigError("network spec: bad conv geometry");
                if (cur.h + 2 * l.pad < l.kernel || cur.w + 2 * l.pad < l.kernel)
                    throw ConfigError("network spec: conv kernel larger than padded input");
                cur = Shape3{l.out_channels, (cur.h + 2 * l.pad - l.kernel) / l.stride + 1,
                             (cur.w + 2 * l.pad - l.kernel) / l.stride + 1};
                break;
            }
            case LayerKind::MaxPool: {
                if (flattened) throw ConfigError("network spec: maxpool after flatten");
                if (l.pool_size == 0 || l.pool_stride == 0)
                    throw ConfigError("network spec: bad pool geometry");
                if (cur.h < l.pool_size || cur.w < l.pool_size)
                    throw ConfigError("network spec: pool window larger than input");
                cur = Shape3{cur.c, (cur.h - l.pool_size) / l.pool_stride + 1,
                             (cur.w - l.pool_size) / l.pool_stride + 1};
                break;
            }
            case LayerKind::Flatten:
                cur = Shape3{cur.count(), 1, 1};
                flattened = true;
                break;
            case LayerKind::Fc:
                if (!flattened) throw ConfigError("network spec: fc requires a flatten first");
                if (l.out_dims == 0) throw ConfigError("network spec: fc with zero outputs");
                cur = Shape3{l.out_dims, 1, 1};
                break;
            case LayerKind::Relu:
            case LayerKind::Dropout:
                break;
        }
        out.push_back(cur);
    }
    return out;
}

namespace {

std::size_t last_fc_index(const NetworkSpec& spec) {
    for (std::size_t i = spec.layers.size(); i > 0; --i)
        if (spec.layers[i - 1].kind == LayerKind::Fc) return i - 1;
    throw ConfigError("network spec: no fully connected layer");
}

// The feature is the post-activation output of the feature fc, i.e. the
// output of the relu that follows it when present.
std::size_t feature_tap_index(const NetworkSpec& spec) {
    std::size_t tap = spec.feature_layer;
    if (tap + 1 < spec.layers.size() && spec.layers[tap + 1].kind == LayerKind::Relu) ++tap;
    return tap;
}

}  // namespace

void validate_spec(const NetworkSpec& spec) {
    if (spec.layers.empty()) throw ConfigError("network spec: no layers");
    const std::vector<Shape3> shapes = layer_output_shapes(spec);
    const std::size_t head = last_fc_index(spec);
    if (spec.layers[head].out_dims != spec.num_outputs)
        throw ConfigError("network spec: head width does not match num_outputs");
    if (spec.feature_layer >= spec.layers.size() ||
        spec.layers[spec.feature_layer].kind != LayerKind::Fc)
        throw ConfigError("network spec: feature layer must be a fc layer");
    if (spec.feature_layer == head)
        throw ConfigError("network spec: feature layer cannot be the classifier head");
    for (std::size_t i = spec.feature_layer + 1; i < head; ++i)
        if (spec.layers[i].kind == LayerKind::Fc)
            throw ConfigError("network spec: feature layer must be the last fc before the head");
    if (spec.layers[spec.feature_layer].out_dims != spec.feature_dim)
        throw ConfigError("network spec: feature layer width does not match feature_dim");
    for (const LayerDesc& l : spec.layers)
        if (l.kind == LayerKind::Dropout && (l.rate < 0.0 || l.rate >= 1.0))
            throw ConfigError("network spec: dropout rate must lie in [0, 1)");
    (void)shapes;
}

NetworkSpec make_preset(const std::string& name, std::size_t in_channels, std::size_t in_h,
                        std::size_t in_w, std::size_t feature_dim, std::size_t num_outputs,
                        double dropout_rate, double width) {
    if (width <= 0.0) throw ConfigError("make_preset: width must be positive");
    const auto scaled = [width](std::size_t base) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(
                                            static_cast<double>(base) * width)));
    };
    NetworkSpec spec;
    spec.preset = name;
    spec.in_channels = in_channels;
    spec.in_h = in_h;
    spec.in_w = in_w;
    spec.feature_dim = feature_dim;
    spec.num_outputs = num_outputs;

    if (name == "anet-mini") {
        spec.layers = {
            LayerDesc::conv(scaled(16), 5, 1, 2), LayerDesc::relu(), LayerDesc::maxpool(2, 2),
            LayerDesc::conv(scaled(32), 5, 1, 2), LayerDesc::relu(), LayerDesc::maxpool(2, 2),
            LayerDesc::flatten(),
        };
    } else if (name == "vnet-mini") {
        for (std::size_t base : {std::size_t{8}, std::size_t{16}, std::size_t{32}}) {
            const std::size_t ch = scaled(base);
            spec.layers.push_back(LayerDesc::conv(ch, 3, 1, 1));
            spec.layers.push_back(LayerDesc::relu());
            spec.layers.push_back(LayerDesc::conv(ch, 3, 1, 1));
            spec.layers.push_back(LayerDesc::relu());
            spec.layers.push_back(LayerDesc::maxpool(2, 2));
        }
        spec.layers.push_back(LayerDesc::flatten());
    } else {
        throw ConfigError("make_preset: unknown preset '" + name + "'");
    }

    spec.feature_layer = spec.layers.size();
    spec.layers.push_back(LayerDesc::fc(feature_dim));
    spec.layers.push_back(LayerDesc::relu());
    spec.layers.push_back(LayerDesc::dropout(dropout_rate));
    spec.layers.push_back(LayerDesc::fc(num_outputs));

    validate_spec(spec);
    return spec;
}

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

namespace {

struct LayerGeom {
    std::size_t weight_count = 0;
    std::size_t bias_count = 0;
    std::size_t fan_in = 0;
};

LayerGeom layer_geometry(const LayerDesc& l, const Shape3& in_shape) {
    LayerGeom g;
    if (l.kind == LayerKind::Conv) {
        g.fan_in = in_shape.c * l.kernel * l.kernel;
        g.weight_count = l.out_channels * g.fan_in;
        g.bias_count = l.out_channels;
    } else if (l.kind == LayerKind::Fc) {
        g.fan_in = in_shape.count();
        g.weight_count = l.out_dims * g.fan_in;
        g.bias_count = l.out_dims;
    }
    return g;
}

std::vector<Shape3> input_shapes(const NetworkSpec& spec) {
    std::vector<Shape3> outs = layer_output_shapes(spec);
    std::vector<Shape3> ins(spec.layers.size());
    Shape3 cur{spec.in_channels, spec.in_h, spec.in_w};
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        ins[i] = cur;
        cur = outs[i];
    }
    return ins;
}

void init_layer(LayerParams& p, const LayerDesc& l, const Shape3& in_shape, bool is_head,
                Rng& rng) {
    const LayerGeom g = layer_geometry(l, in_shape);
    p.weight.resize(g.weight_count);
    p.bias.assign(g.bias_count, 0.0);
    p.weight_vel.assign(g.weight_count, 0.0);
    p.bias_vel.assign(g.bias_count, 0.0);
    const double variance = (is_head ? 1.0 : 2.0) / static_cast<double>(g.fan_in);
    const double stddev = std::sqrt(variance);
    for (double& w : p.weight) w = rng.normal() * stddev;
}

}  // namespace

NetworkParams build_network(const NetworkSpec& spec, Rng& rng) {
    validate_spec(spec);
    NetworkParams params;
    params.spec = spec;
    params.layers.resize(spec.layers.size());
    const std::vector<Shape3> ins = input_shapes(spec);
    const std::size_t head = last_fc_index(spec);
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerDesc& l = spec.layers[i];
        if (l.kind == LayerKind::Conv || l.kind == LayerKind::Fc)
            init_layer(params.layers[i], l, ins[i], i == head, rng);
    }
    return params;
}

void reinit_head(NetworkParams& params, Rng& rng) {
    const std::size_t head = last_fc_index(params.spec);
    const std::vector<Shape3> ins = input_shapes(params.spec);
    init_layer(params.layers[head], params.spec.layers[head], ins[head], true, rng);
}

std::size_t parameter_count(const NetworkParams& params) {
    std::size_t total = 0;
    for (const LayerParams& l : params.layers) total += l.weight.size() + l.bias.size();
    return total;
}

// ---------------------------------------------------------------------------
// Conv kernels (im2col form)
// ---------------------------------------------------------------------------

namespace {

struct ConvGeom {
    std::size_t in_c, in_h, in_w, out_c, out_h, out_w, kernel, stride, pad;
    std::size_t patch() const { return in_c * kernel * kernel; }   // E
    std::size_t spatial() const { return out_h * out_w; }          // P
};

ConvGeom conv_geometry(const LayerDesc& l, const Shape3& in) {
    ConvGeom g{};
    g.in_c = in.c;
    g.in_h = in.h;
    g.in_w = in.w;
    g.out_c = l.out_channels;
    g.kernel = l.kernel;
    g.stride = l.stride;
    g.pad = l.pad;
    g.out_h = (in.h + 2 * l.pad - l.kernel) / l.stride + 1;
    g.out_w = (in.w + 2 * l.pad - l.kernel) / l.stride + 1;
    return g;
}

// col is E x P: rows walk (channel, ky, kx), columns walk output positions.
void im2col(const ConvGeom& g, const double* in, double* col) {
    const std::size_t P = g.spatial();
    std::size_t e = 0;
    for (std::size_t c = 0; c < g.in_c; ++c) {
        const double* chan = in + c * g.in_h * g.in_w;
        for (std::size_t ky = 0; ky < g.kernel; ++ky) {
            for (std::size_t kx = 0; kx < g.kernel; ++kx, ++e) {
                double* crow = col + e * P;
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const std::ptrdiff_t iy =
                        static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                        static_cast<std::ptrdiff_t>(g.pad);
                    const bool y_ok = iy >= 0 && iy < static_cast<std::ptrdiff_t>(g.in_h);
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                        const std::ptrdiff_t ix =
                            static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.pad);
                        const bool ok =
                            y_ok && ix >= 0 && ix < static_cast<std::ptrdiff_t>(g.in_w);
                        crow[oy * g.out_w + ox] =
                            ok ? chan[static_cast<std::size_t>(iy) * g.in_w +
                                      static_cast<std::size_t>(ix)]
                               : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_add(const ConvGeom& g, const double* col, double* in_grad) {
    const std::size_t P = g.spatial();
    std::size_t e = 0;
    for (std::size_t c = 0; c < g.in_c; ++c) {
        double* chan = in_grad + c * g.in_h * g.in_w;
        for (std::size_t ky = 0; ky < g.kernel; ++ky) {
            for (std::size_t kx = 0; kx < g.kernel; ++kx, ++e) {
                const double* crow = col + e * P;
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const std::ptrdiff_t iy =
                        static_cast<std::ptrdiff_t>(oy * g.stride + ky) -
                        static_cast<std::ptrdiff_t>(g.pad);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(g.in_h)) continue;
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                        const std::ptrdiff_t ix =
                            static_cast<std::ptrdiff_t>(ox * g.stride + kx) -
                            static_cast<std::ptrdiff_t>(g.pad);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(g.in_w)) continue;
                        chan[static_cast<std::size_t>(iy) * g.in_w +
                             static_cast<std::size_t>(ix)] += crow[oy * g.out_w + ox];
                    }
                }
            }
        }
    }
}

// acc += sum_p a[p]*b[p], four-lane unrolled with a fixed combination order.
double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t p = 0;
    for (; p + 4 <= n; p += 4) {
        s0 += a[p] * b[p];
        s1 += a[p + 1] * b[p + 1];
        s2 += a[p + 2] * b[p + 2];
        s3 += a[p + 3] * b[p + 3];
    }
    double tail = 0.0;
    for (; p < n; ++p) tail += a[p] * b[p];
    return ((s0 + s1) + (s2 + s3)) + tail;
}

}  // namespace

// ---------------------------------------------------------------------------
// Forward
// ---------------------------------------------------------------------------

ForwardResult forward(const NetworkParams& params, const Tensor4& batch, RunMode mode,
                      Rng* rng) {
    const NetworkSpec& spec = params.spec;
    if (batch.c != spec.in_channels || batch.h != spec.in_h || batch.w != spec.in_w)
        throw ShapeError("forward: batch dimensions do not match network input");
    if (batch.n == 0) throw ShapeError("forward: empty batch");
    for (double v : batch.data)
        if (!std::isfinite(v)) throw NumericError("forward: non-finite input pixel");

    const std::size_t B = batch.n;
    const std::vector<Shape3> ins = input_shapes(spec);
    const std::size_t tap = feature_tap_index(spec);

    ForwardResult result;
    ForwardCache& cache = result.cache;
    cache.batch = B;
    cache.in_shapes = ins;
    cache.inputs.resize(spec.layers.size());
    cache.pool_argmax.resize(spec.layers.size());
    cache.dropout_mask.resize(spec.layers.size());

    std::vector<double> act = batch.data;  // B x (c*h*w), sample-major
    std::vector<double> col;

    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        const LayerDesc& l = spec.layers[li];
        const Shape3 in = ins[li];
        const std::size_t in_count = in.count();

        switch (l.kind) {
            case LayerKind::Conv: {
                const ConvGeom g = conv_geometry(l, in);
                const std::size_t E = g.patch();
                const std::size_t P = g.spatial();
                const std::size_t out_count = g.out_c * P;
                std::vector<double> out(B * out_count, 0.0);
                col.assign(E * P, 0.0);
                const double* W = params.layers[li].weight.data();
                const double* bias = params.layers[li].bias.data();
                for (std::size_t s = 0; s < B; ++s) {
                    im2col(g, act.data() + s * in_count, col.data());
                    double* o = out.data() + s * out_count;
                    for (std::size_t oc = 0; oc < g.out_c; ++oc) {
                        double* orow = o + oc * P;
                        const double* wrow = W + oc * E;
                        for (std::size_t e = 0; e < E; ++e) {
                            const double wv = wrow[e];
                            const double* crow = col.data() + e * P;
                            for (std::size_t p = 0; p < P; ++p) orow[p] += wv * crow[p];
                        }
                        const double bv = bias[oc];
                        for (std::size_t p = 0; p < P; ++p) orow[p] += bv;
                    }
                }
                cache.inputs[li] = std::move(act);
                act = std::move(out);
                break;
            }
            case LayerKind::Relu: {
                cache.inputs[li] = act;
                for (double& v : act) v = v > 0.0 ? v : 0.0;
                break;
            }
            case LayerKind::MaxPool: {
                const std::size_t oh = (in.h - l.pool_size) / l.pool_stride + 1;
                const std::size_t ow = (in.w - l.pool_size) / l.pool_stride + 1;
                const std::size_t out_count = in.c * oh * ow;
                std::vector<double> out(B * out_count);
                std::vector<std::size_t>& amax = cache.pool_argmax[li];
                amax.resize(B * out_count);
                for (std::size_t s = 0; s < B; ++s) {
                    const double* a = act.data() + s * in_count;
                    double* o = out.data() + s * out_count;
                    std::size_t* am = amax.data() + s * out_count;
                    std::size_t oi = 0;
                    for (std::size_t c = 0; c < in.c; ++c) {
                        const double* chan = a + c * in.h * in.w;
                        for (std::size_t oy = 0; oy < oh; ++oy) {
                            for (std::size_t ox = 0; ox < ow; ++ox, ++oi) {
                                std::size_t best_idx = (oy * l.pool_stride) * in.w +
                                                       ox * l.pool_stride;
                                double best = chan[best_idx];
                                for (std::size_t py = 0; py < l.pool_size; ++py) {
                                    for (std::size_t px = 0; px < l.pool_size; ++px) {
                                        const std::size_t idx =
                                            (oy * l.pool_stride + py) * in.w +
                                            ox * l.pool_stride + px;
                                        if (chan[idx] > best) {
                                            best = chan[idx];
                                            best_idx = idx;
                                        }
                                    }
                                }
                                o[oi] = best;
                                am[oi] = c * in.h * in.w + best_idx;
                            }
                        }
                    }
                }
                cache.inputs[li] = std::move(act);
                act = std::move(out);
                break;
            }
            case LayerKind::Flatten:
                cache.inputs[li] = act;  // layout unchanged
                break;
            case LayerKind::Fc: {
                const std::size_t IN = in.count();
                const std::size_t OUT = l.out_dims;
                std::vector<double> out(B * OUT);
                const double* W = params.layers[li].weight.data();
                const double* bias = params.layers[li].bias.data();
                for (std::size_t s = 0; s < B; ++s) {
                    const double* x = act.data() + s * IN;
                    double* o = out.data() + s * OUT;
                    for (std::size_t u = 0; u < OUT; ++u) o[u] = bias[u] + dot(W + u * IN, x, IN);
                }
                cache.inputs[li] = std::move(act);
                act = std::move(out);
                break;
            }
            case LayerKind::Dropout: {
                cache.inputs[li] = act;
                if (mode == RunMode::Train && l.rate > 0.0) {
                    if (rng == nullptr)
                        throw ConfigError("forward: train mode with dropout requires an rng");
                    const double keep = 1.0 - l.rate;
                    const double scale = 1.0 / keep;
                    std::vector<double>& mask = cache.dropout_mask[li];
                    mask.resize(act.size());
                    for (std::size_t i = 0; i < act.size(); ++i) {
                        mask[i] = rng->bernoulli(keep) ? scale : 0.0;
                        act[i] *= mask[i];
                    }
                }
                break;
            }
        }
        if (li == tap) cache.feature = act;
    }

    DenseMatrix logits(B, spec.num_outputs);
    logits.values = std::move(act);
    result.logits = std::move(logits);
    return result;
}

// ---------------------------------------------------------------------------
// Loss
// ---------------------------------------------------------------------------

DenseMatrix softmax_rows(const DenseMatrix& logits) {
    DenseMatrix out(logits.rows, logits.cols);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double* row = logits.row_ptr(i);
        double m = row[0];
        for (std::size_t j = 1; j < logits.cols; ++j) m = std::max(m, row[j]);
        double denom = 0.0;
        double* o = out.row_ptr(i);
        for (std::size_t j = 0; j < logits.cols; ++j) {
            o[j] = std::exp(row[j] - m);
            denom += o[j];
        }
        for (std::size_t j = 0; j < logits.cols; ++j) o[j] /= denom;
    }
    return out;
}

CrossEntropyResult softmax_cross_entropy(const DenseMatrix& logits,
                                         const std::vector<std::size_t>& labels) {
    if (labels.size() != logits.rows)
        throw ShapeError("softmax_cross_entropy: label count does not match batch");
    for (std::size_t lab : labels)
        if (lab >= logits.cols) throw ConfigError("softmax_cross_entropy: label out of range");

    const double inv_n = 1.0 / static_cast<double>(logits.rows);
    CrossEntropyResult result;
    result.grad_logits = softmax_rows(logits);
    double loss = 0.0;
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const double* row = logits.row_ptr(i);
        double m = row[0];
        for (std::size_t j = 1; j < logits.cols; ++j) m = std::max(m, row[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < logits.cols; ++j) denom += std::exp(row[j] - m);
        loss += m + std::log(denom) - row[labels[i]];
        double* g = result.grad_logits.row_ptr(i);
        for (std::size_t j = 0; j < logits.cols; ++j) g[j] *= inv_n;
        g[labels[i]] -= inv_n;
    }
    result.loss = loss * inv_n;
    return result;
}

// ---------------------------------------------------------------------------
// Backward
// ---------------------------------------------------------------------------

NetworkGrads backward(const NetworkParams& params, const ForwardCache& cache,
                      const DenseMatrix& grad_logits) {
    const NetworkSpec& spec = params.spec;
    if (cache.inputs.size() != spec.layers.size() || cache.in_shapes.size() != spec.layers.size())
        throw ShapeError("backward: cache does not match network");
    if (grad_logits.rows != cache.batch || grad_logits.cols != spec.num_outputs)
        throw ShapeError("backward: grad_logits shape mismatch");

    const std::size_t B = cache.batch;
    NetworkGrads grads(spec.layers.size());
    for (std::size_t li = 0; li < spec.layers.size(); ++li) {
        grads[li].weight.assign(params.layers[li].weight.size(), 0.0);
        grads[li].bias.assign(params.layers[li].bias.size(), 0.0);
    }

    std::vector<double> delta = grad_logits.values;  // grad wrt current layer output
    std::vector<double> col, dcol;

    for (std::size_t li = spec.layers.size(); li > 0; --li) {
        const std::size_t i = li - 1;
        const LayerDesc& l = spec.layers[i];
        const Shape3 in = cache.in_shapes[i];
        const std::size_t in_count = in.count();
        const std::vector<double>& x = cache.inputs[i];
        if (x.size() != B * in_count) throw ShapeError("backward: stale or mismatched cache");

        switch (l.kind) {
            case LayerKind::Conv: {
                const ConvGeom g = conv_geometry(l, in);
                const std::size_t E = g.patch();
                const std::size_t P = g.spatial();
                const std::size_t out_count = g.out_c * P;
                if (delta.size() != B * out_count)
                    throw ShapeError("backward: stale or mismatched cache");
                std::vector<double> dx(B * in_count, 0.0);
                col.assign(E * P, 0.0);
                dcol.assign(E * P, 0.0);
                double* dW = grads[i].weight.data();
                double* db = grads[i].bias.data();
                const double* W = params.layers[i].weight.data();
                for (std::size_t s = 0; s < B; ++s) {
                    im2col(g, x.data() + s * in_count, col.data());
                    const double* dout = delta.data() + s * out_count;
                    for (std::size_t oc = 0; oc < g.out_c; ++oc) {
                        const double* drow = dout + oc * P;
                        double* dwrow = dW + oc * E;
                        for (std::size_t e = 0; e < E; ++e)
                            dwrow[e] += dot(drow, col.data() + e * P, P);
                        double acc = 0.0;
                        for (std::size_t p = 0; p < P; ++p) acc += drow[p];
                        db[oc] += acc;
                    }
                    std::fill(dcol.begin(), dcol.end(), 0.0);
                    for (std::size_t oc = 0; oc < g.out_c; ++oc) {
                        const double* drow = dout + oc * P;
                        const double* wrow = W + oc * E;
                        for (std::size_t e = 0; e < E; ++e) {
                            const double wv = wrow[e];
                            double* dcrow = dcol.data() + e * P;
                            for (std::size_t p = 0; p < P; ++p) dcrow[p] += wv * drow[p];
                        }
                    }
                    col2im_add(g, dcol.data(), dx.data() + s * in_count);
                }
                delta = std::move(dx);
                break;
            }
            case LayerKind::Relu: {
                if (delta.size() != x.size())
                    throw ShapeError("backward: stale or mismatched cache");
                for (std::size_t j = 0; j < delta.size(); ++j)
                    if (x[j] <= 0.0) delta[j] = 0.0;
                break;
            }
            case LayerKind::MaxPool: {
                const std::vector<std::size_t>& amax = cache.pool_argmax[i];
                if (delta.size() != amax.size())
                    throw ShapeError("backward: stale or mismatched cache");
                std::vector<double> dx(B * in_count, 0.0);
                const std::size_t out_count = amax.size() / B;
                for (std::size_t s = 0; s < B; ++s) {
                    double* d = dx.data() + s * in_count;
                    const double* dout = delta.data() + s * out_count;
                    const std::size_t* am = amax.data() + s * out_count;
                    for (std::size_t oi = 0; oi < out_count; ++oi) d[am[oi]] += dout[oi];
                }
                delta = std::move(dx);
                break;
            }
            case LayerKind::Flatten:
                break;  // identity on the buffer
            case LayerKind::Fc: {
                const std::size_t IN = in_count;
                const std::size_t OUT = l.out_dims;
                if (delta.size() != B * OUT)
                    throw ShapeError("backward: stale or mismatched cache");
                std::vector<double> dx(B * IN, 0.0);
                double* dW = grads[i].weight.data();
                double* db = grads[i].bias.data();
                const double* W = params.layers[i].weight.data();
                for (std::size_t s = 0; s < B; ++s) {
                    const double* xs = x.data() + s * IN;
                    const double* ds = delta.data() + s * OUT;
                    double* dxs = dx.data() + s * IN;
                    for (std::size_t u = 0; u < OUT; ++u) {
                        const double g = ds[u];
                        db[u] += g;
                        double* dwrow = dW + u * IN;
                        const double* wrow = W + u * IN;
                        for (std::size_t v = 0; v < IN; ++v) {
                            dwrow[v] += g * xs[v];
                            dxs[v] += g * wrow[v];
                        }
                    }
                }
                delta = std::move(dx);
                break;
            }
            case LayerKind::Dropout: {
                const std::vector<double>& mask = cache.dropout_mask[i];
                if (!mask.empty()) {
                    if (delta.size() != mask.size())
                        throw ShapeError("backward: stale or mismatched cache");
                    for (std::size_t j = 0; j < delta.size(); ++j) delta[j] *= mask[j];
                }
                break;
            }
        }
    }
    return grads;
}

// ---------------------------------------------------------------------------
// SGD with momentum
// ---------------------------------------------------------------------------

void sgd_momentum_step(NetworkParams& params, const NetworkGrads& grads, double lr,
                       double momentum, double weight_decay) {
    if (grads.size() != params.layers.size())
        throw ShapeError("sgd_momentum_step: gradient layer count mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (grads[i].weight.size() != params.layers[i].weight.size() ||
            grads[i].bias.size() != params.layers[i].bias.size())
            throw ShapeError("sgd_momentum_step: gradient shape mismatch");
        for (double g : grads[i].weight)
            if (!std::isfinite(g)) throw NumericError("sgd_momentum_step: non-finite gradient");
        for (double g : grads[i].bias)
            if (!std::isfinite(g)) throw NumericError("sgd_momentum_step: non-finite gradient");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        LayerParams& p = params.layers[i];
        for (std::size_t j = 0; j < p.weight.size(); ++j) {
            p.weight_vel[j] = momentum * p.weight_vel[j] + grads[i].weight[j] +
                              weight_decay * p.weight[j];
            p.weight[j] -= lr * p.weight_vel[j];
        }
        for (std::size_t j = 0; j < p.bias.size(); ++j) {
            p.bias_vel[j] = momentum * p.bias_vel[j] + grads[i].bias[j];
            p.bias[j] -= lr * p.bias_vel[j];
        }
    }
}

// ---------------------------------------------------------------------------
// Feature extraction and augmentation
// ---------------------------------------------------------------------------

DenseMatrix extract_features(const NetworkParams& params, const Tensor4& images,
                             std::size_t batch_size) {
    if (batch_size == 0) throw ConfigError("extract_features: batch_size must be >= 1");
    const std::size_t n = images.n;
    const std::size_t fd = params.spec.feature_dim;
    DenseMatrix features(n, fd);
    const std::size_t sample = images.sample_size();
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t count = std::min(batch_size, n - start);
        Tensor4 batch(count, images.c, images.h, images.w);
        std::memcpy(batch.data.data(), images.data.data() + start * sample,
                    count * sample * sizeof(double));
        ForwardResult fr = forward(params, batch, RunMode::Eval);
        if (fr.cache.feature.size() != count * fd)
            throw ShapeError("extract_features: feature tap size mismatch");
        std::memcpy(features.row_ptr(start), fr.cache.feature.data(),
                    count * fd * sizeof(double));
    }
    return features;
}

void flip_horizontal(Tensor4& images, std::size_t sample) {
    for (std::size_t c = 0; c < images.c; ++c)
        for (std::size_t y = 0; y < images.h; ++y)
            for (std::size_t x = 0; x < images.w / 2; ++x)
                std::swap(images.at(sample, c, y, x),
                          images.at(sample, c, y, images.w - 1 - x));
}

Tensor4 augment_batch(const Tensor4& images, Rng& rng, bool flip, std::size_t crop_pad) {
    Tensor4 out = images;
    for (std::size_t s = 0; s < images.n; ++s) {
        if (flip && rng.bernoulli(0.5)) flip_horizontal(out, s);
        if (crop_pad == 0) continue;
        const std::size_t dy = rng.uniform_index(2 * crop_pad + 1);
        const std::size_t dx = rng.uniform_index(2 * crop_pad + 1);
        if (dy == crop_pad && dx == crop_pad) continue;  // centered crop is the identity
        // out(y, x) = in(y + dy - pad, x + dx - pad), zero outside.
        Tensor4 shifted(1, images.c, images.h, images.w);
        for (std::size_t c = 0; c < images.c; ++c) {
            for (std::size_t y = 0; y < images.h; ++y) {
                const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + dy) -
                                          static_cast<std::ptrdiff_t>(crop_pad);
                if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(images.h)) continue;
                for (std::size_t x = 0; x < images.w; ++x) {
                    const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + dx) -
                                              static_cast<std::ptrdiff_t>(crop_pad);
                    if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(images.w)) continue;
                    shifted.at(0, c, y, x) =
                        out.at(s, c, static_cast<std::size_t>(sy), static_cast<std::size_t>(sx));
                }
            }
        }
        std::memcpy(out.sample_ptr(s), shifted.data.data(),
                    images.sample_size() * sizeof(double));
    }
    return out;
}

}  // namespace ufkm
