#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace ufkm {

/// Knobs for one end-to-end training pipeline. Defaults mirror the reference
/// hyperparameters (lr 0.05, momentum 0.9, dropout, flips and crops, lambda 1)
/// with desk-scale overrides for epochs (30 instead of 500), batch size (64)
/// and cluster count (k = 10 instead of 50).
struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    double learning_rate = 0.05;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    double dropout_rate = 0.5;
    bool flip = true;
    std::size_t crop_pad = 2;
    std::size_t k = 10;
    std::uint64_t seed = 42;

    // clustering-side preprocessing: effective PCA dims are
    // min(pca_dims, feature_dim, N-1)
    std::size_t pca_dims = 256;
    double pca_eps = 1e-5;

    // early stop: nmi_vs_previous >= stability_nmi for stability_window
    // consecutive epochs AND relative loss spread < 1% over that window
    double stability_nmi = 0.95;
    std::size_t stability_window = 3;

    // cluster identities permute between epochs, so the classifier head is
    // redrawn after every re-clustering by default
    bool reinit_head = true;

    void validate() const;  // throws ConfigError
};

/// Full CLI-facing configuration: key=value file keys plus flag overrides.
struct CliConfig {
    std::string preset = "anet-mini";  // or "vnet-mini"
    double svm_lambda = 1.0;
    TrainConfig train;
};

/// Apply one key=value pair. Unknown keys are rejected with ConfigError.
void apply_config_entry(CliConfig& cfg, const std::string& key, const std::string& value);

/// Parse line-based `key=value` UTF-8 text with '#' comments.
CliConfig parse_config_text(const std::string& text);

CliConfig load_config_file(const std::filesystem::path& path);

/// Inverse of parse_config_text; doubles round-trip exactly.
std::string config_to_text(const CliConfig& cfg);

}  // namespace ufkm
