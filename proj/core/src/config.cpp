#include "ufkm/config.hpp"

#include <fstream>
#include <sstream>

#include "ufkm/error.hpp"
#include "ufkm/format.hpp"

namespace ufkm {

void TrainConfig::validate() const {
    if (epochs == 0) throw ConfigError("config: epochs must be >= 1");
    if (batch_size == 0) throw ConfigError("config: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("config: lr must be > 0");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("config: momentum must lie in [0,1)");
    if (weight_decay < 0.0) throw ConfigError("config: weight_decay must be >= 0");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("config: dropout must lie in [0,1)");
    if (k == 0) throw ConfigError("config: k must be >= 1");
    if (pca_dims == 0) throw ConfigError("config: pca_dims must be >= 1");
    if (pca_eps < 0.0) throw ConfigError("config: pca_eps must be >= 0");
    if (stability_nmi < 0.0 || stability_nmi > 1.0)
        throw ConfigError("config: stability_nmi must lie in [0,1]");
    if (stability_window == 0) throw ConfigError("config: stability_window must be >= 1");
}

void apply_config_entry(CliConfig& cfg, const std::string& key, const std::string& value) {
    try {
        if (key == "preset") {
            if (value != "anet-mini" && value != "vnet-mini")
                throw ConfigError("config: unknown preset '" + value + "'");
            cfg.preset = value;
        } else if (key == "epochs") {
            cfg.train.epochs = parse_size(value);
        } else if (key == "batch_size") {
            cfg.train.batch_size = parse_size(value);
        } else if (key == "lr") {
            cfg.train.learning_rate = parse_double(value);
        } else if (key == "momentum") {
            cfg.train.momentum = parse_double(value);
        } else if (key == "weight_decay") {
            cfg.train.weight_decay = parse_double(value);
        } else if (key == "dropout") {
            cfg.train.dropout_rate = parse_double(value);
        } else if (key == "k") {
            cfg.train.k = parse_size(value);
        } else if (key == "pca_dims") {
            cfg.train.pca_dims = parse_size(value);
        } else if (key == "pca_eps") {
            cfg.train.pca_eps = parse_double(value);
        } else if (key == "svm_lambda") {
            cfg.svm_lambda = parse_double(value);
        } else if (key == "seed") {
            cfg.train.seed = parse_u64(value);
        } else if (key == "flip") {
            cfg.train.flip = parse_bool(value);
        } else if (key == "crop_pad") {
            cfg.train.crop_pad = parse_size(value);
        } else if (key == "stability_nmi") {
            cfg.train.stability_nmi = parse_double(value);
        } else if (key == "stability_window") {
            cfg.train.stability_window = parse_size(value);
        } else {
            throw ConfigError("config: unknown key '" + key + "'");
        }
    } catch (const IoError& e) {
        throw ConfigError("config: bad value for '" + key + "': " + e.what());
    }
}

CliConfig parse_config_text(const std::string& text) {
    CliConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: line " + std::to_string(lineno) + " is not key=value");
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        const auto kl = key.find_last_not_of(" \t");
        key = key.substr(0, kl == std::string::npos ? 0 : kl + 1);
        const auto vf = value.find_first_not_of(" \t");
        value = vf == std::string::npos ? "" : value.substr(vf);
        apply_config_entry(cfg, key, value);
    }
    cfg.train.validate();
    return cfg;
}

CliConfig load_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string config_to_text(const CliConfig& cfg) {
    std::ostringstream out;
    out << "preset=" << cfg.preset << "\n";
    out << "epochs=" << cfg.train.epochs << "\n";
    out << "batch_size=" << cfg.train.batch_size << "\n";
    out << "lr=" << format_double(cfg.train.learning_rate) << "\n";
    out << "momentum=" << format_double(cfg.train.momentum) << "\n";
    out << "weight_decay=" << format_double(cfg.train.weight_decay) << "\n";
    out << "dropout=" << format_double(cfg.train.dropout_rate) << "\n";
    out << "k=" << cfg.train.k << "\n";
    out << "pca_dims=" << cfg.train.pca_dims << "\n";
    out << "pca_eps=" << format_double(cfg.train.pca_eps) << "\n";
    out << "svm_lambda=" << format_double(cfg.svm_lambda) << "\n";
    out << "seed=" << cfg.train.seed << "\n";
    out << "flip=" << (cfg.train.flip ? "true" : "false") << "\n";
    out << "crop_pad=" << cfg.train.crop_pad << "\n";
    out << "stability_nmi=" << format_double(cfg.train.stability_nmi) << "\n";
    out << "stability_window=" << cfg.train.stability_window << "\n";
    return out.str();
}

}  // namespace ufkm
