#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ufkm/matrix.hpp"
#include "ufkm/rng.hpp"

namespace ufkm {

// ---------------------------------------------------------------------------
// Batched image tensor (N x C x H x W, doubles)
// ---------------------------------------------------------------------------

struct Tensor4 {
    std::size_t n = 0, c = 0, h = 0, w = 0;
    std::vector<double> data;

    Tensor4() = default;
    Tensor4(std::size_t n_, std::size_t c_, std::size_t h_, std::size_t w_)
        : n(n_), c(c_), h(h_), w(w_), data(n_ * c_ * h_ * w_, 0.0) {}

    std::size_t sample_size() const { return c * h * w; }
    double* sample_ptr(std::size_t i) { return data.data() + i * sample_size(); }
    const double* sample_ptr(std::size_t i) const { return data.data() + i * sample_size(); }
    double& at(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) {
        return data[((i * c + ch) * h + y) * w + x];
    }
    double at(std::size_t i, std::size_t ch, std::size_t y, std::size_t x) const {
        return data[((i * c + ch) * h + y) * w + x];
    }
};

// ---------------------------------------------------------------------------
// Architecture description
// ---------------------------------------------------------------------------

enum class LayerKind { Conv, Relu, MaxPool, Flatten, Fc, Dropout };

struct LayerDesc {
    LayerKind kind = LayerKind::Relu;
    std::size_t out_channels = 0, kernel = 0, stride = 1, pad = 0;  // conv
    std::size_t pool_size = 0, pool_stride = 0;                     // maxpool
    std::size_t out_dims = 0;                                       // fc
    double rate = 0.0;                                              // dropout

    static LayerDesc conv(std::size_t out_channels, std::size_t kernel, std::size_t stride,
                          std::size_t pad);
    static LayerDesc relu();
    static LayerDesc maxpool(std::size_t size, std::size_t stride);
    static LayerDesc flatten();
    static LayerDesc fc(std::size_t out_dims);
    static LayerDesc dropout(double rate);
};

struct Shape3 {
    std::size_t c = 0, h = 0, w = 0;
    std::size_t count() const { return c * h * w; }
};

/// Ordered layer stack from input image to classifier logits. Exactly one
/// fully connected layer is the feature layer: the last one before the head.
/// Its post-activation output is what downstream clustering consumes.
struct NetworkSpec {
    std::string preset = "custom";
    std::size_t in_channels = 1, in_h = 16, in_w = 16;
    std::vector<LayerDesc> layers;
    std::size_t feature_layer = 0;  // index into layers, must be an Fc
    std::size_t feature_dim = 0;
    std::size_t num_outputs = 0;
};

/// Activation shape after each layer; throws ConfigError if the chain is
/// inconsistent (bad fc placement, vanishing spatial dims, head mismatch).
std::vector<Shape3> layer_output_shapes(const NetworkSpec& spec);

void validate_spec(const NetworkSpec& spec);

/// "anet-mini": two 5x5 conv stages (16, 32 channels) with pooling.
/// "vnet-mini": three stages of stacked 3x3 conv pairs (8, 16, 32).
/// Both end in fc(feature_dim) -> relu -> dropout -> fc(num_outputs).
/// `width` scales the channel counts (minimum 1 per layer).
NetworkSpec make_preset(const std::string& name, std::size_t in_channels, std::size_t in_h,
                        std::size_t in_w, std::size_t feature_dim, std::size_t num_outputs,
                        double dropout_rate, double width = 1.0);

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

struct LayerParams {
    std::vector<double> weight;  // conv: [outC][inC][k][k]; fc: [out][in]
    std::vector<double> bias;
    std::vector<double> weight_vel;  // momentum state, same shapes
    std::vector<double> bias_vel;
};

struct NetworkParams {
    NetworkSpec spec;
    std::vector<LayerParams> layers;  // parallel to spec.layers
};

struct LayerGrads {
    std::vector<double> weight;
    std::vector<double> bias;
};
using NetworkGrads = std::vector<LayerGrads>;

/// Fan-in scaled normal init (variance 2/fan_in before ReLU, 1/fan_in for
/// the head); zero biases and velocities.
NetworkParams build_network(const NetworkSpec& spec, Rng& rng);

/// Redraw the classifier head weights (used after each re-clustering, since
/// cluster identities permute arbitrarily between epochs).
void reinit_head(NetworkParams& params, Rng& rng);

std::size_t parameter_count(const NetworkParams& params);

// ---------------------------------------------------------------------------
// Forward / loss / backward / update
// ---------------------------------------------------------------------------

enum class RunMode { Train, Eval };

struct ForwardCache {
    std::size_t batch = 0;
    std::vector<Shape3> in_shapes;                       // activation shape entering each layer
    std::vector<std::vector<double>> inputs;             // activation entering each layer
    std::vector<std::vector<std::size_t>> pool_argmax;   // per layer (empty unless maxpool)
    std::vector<std::vector<double>> dropout_mask;       // scaled keep masks (train mode)
    std::vector<double> feature;                         // batch x feature_dim tap
};

struct ForwardResult {
    DenseMatrix logits;  // batch x num_outputs
    ForwardCache cache;
};

/// Eval mode is deterministic and mask-free; train mode draws dropout masks
/// from rng (required iff the spec has a dropout layer with rate > 0) with
/// inverted scaling, so eval needs no rescale.
ForwardResult forward(const NetworkParams& params, const Tensor4& batch, RunMode mode,
                      Rng* rng = nullptr);

struct CrossEntropyResult {
    double loss = 0.0;
    DenseMatrix grad_logits;  // (softmax - one_hot) / N
};

/// Mean negative log softmax likelihood, computed with max-subtraction.
CrossEntropyResult softmax_cross_entropy(const DenseMatrix& logits,
                                         const std::vector<std::size_t>& labels);

DenseMatrix softmax_rows(const DenseMatrix& logits);

/// Exact analytic parameter gradients for the forward call that produced
/// `cache`. grad_logits must be batch x num_outputs.
NetworkGrads backward(const NetworkParams& params, const ForwardCache& cache,
                      const DenseMatrix& grad_logits);

/// v <- momentum*v + g + weight_decay*w; w <- w - lr*v. Weight decay skips
/// biases. Rejects non-finite gradients without touching the parameters.
void sgd_momentum_step(NetworkParams& params, const NetworkGrads& grads, double lr,
                       double momentum, double weight_decay);

/// N x feature_dim matrix of feature-layer activations, eval mode.
DenseMatrix extract_features(const NetworkParams& params, const Tensor4& images,
                             std::size_t batch_size);

/// Each image is independently mirrored about the vertical axis with
/// probability 0.5 (when flip is set) and re-cropped to its original size
/// from a zero-padded canvas at a uniformly random offset.
Tensor4 augment_batch(const Tensor4& images, Rng& rng, bool flip, std::size_t crop_pad);

/// In-place horizontal mirror of one sample (exposed for tests; an involution).
void flip_horizontal(Tensor4& images, std::size_t sample);

}  // namespace ufkm
