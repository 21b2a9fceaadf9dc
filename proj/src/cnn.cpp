#include "dnt/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "dnt/errors.hpp"

namespace dnt::classifier {

using nlohmann::json;

std::string to_string(Activation a) { return a == Activation::relu ? "relu" : "tanh"; }

std::string to_string(Optimizer o) {
    switch (o) {
        case Optimizer::adam: return "adam";
        case Optimizer::sgd: return "sgd";
        case Optimizer::rmsprop: return "rmsprop";
    }
    return "adam";
}

void CnnConfig::validate() const {
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate: must be in [0, 1)");
    if (epochs < 1) throw ConfigError("epochs: must be >= 1");
    if (conv_filters < 1) throw ConfigError("conv_filters: must be >= 1");
    if (kernel_size < 1) throw ConfigError("kernel_size: must be >= 1");
    if (fc_layers < 1) throw ConfigError("fc_layers: must be >= 1");
    if (fc_neurons < 1) throw ConfigError("fc_neurons: must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size: must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate: must be > 0");
}

std::string CnnConfig::to_json() const {
    json j = {
        {"activation", to_string(activation)},   {"optimizer", to_string(optimizer)},
        {"dropout_rate", dropout_rate},          {"epochs", epochs},
        {"conv_filters", conv_filters},          {"kernel_size", kernel_size},
        {"fc_layers", fc_layers},                {"fc_neurons", fc_neurons},
        {"batch_size", batch_size},              {"learning_rate", learning_rate},
        {"seed", seed},
    };
    return j.dump();
}

CnnConfig CnnConfig::from_json(const std::string& text, const std::string& source) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError(source + ": expected object");
    CnnConfig cfg;
    for (const auto& [key, val] : j.items()) {
        try {
            if (key == "activation") {
                const auto s = val.get<std::string>();
                if (s == "relu") {
                    cfg.activation = Activation::relu;
                } else if (s == "tanh") {
                    cfg.activation = Activation::tanh;
                } else {
                    throw ConfigError("activation: expected relu or tanh");
                }
            } else if (key == "optimizer") {
                const auto s = val.get<std::string>();
                if (s == "adam") {
                    cfg.optimizer = Optimizer::adam;
                } else if (s == "sgd") {
                    cfg.optimizer = Optimizer::sgd;
                } else if (s == "rmsprop") {
                    cfg.optimizer = Optimizer::rmsprop;
                } else {
                    throw ConfigError("optimizer: expected adam, sgd or rmsprop");
                }
            } else if (key == "dropout_rate") {
                cfg.dropout_rate = val.get<double>();
            } else if (key == "epochs") {
                cfg.epochs = val.get<int>();
            } else if (key == "conv_filters") {
                cfg.conv_filters = val.get<int>();
            } else if (key == "kernel_size") {
                cfg.kernel_size = val.get<int>();
            } else if (key == "fc_layers") {
                cfg.fc_layers = val.get<int>();
            } else if (key == "fc_neurons") {
                cfg.fc_neurons = val.get<int>();
            } else if (key == "batch_size") {
                cfg.batch_size = val.get<int>();
            } else if (key == "learning_rate") {
                cfg.learning_rate = val.get<double>();
            } else if (key == "seed") {
                cfg.seed = val.get<std::uint64_t>();
            } else {
                throw ConfigError(key + ": unknown field");
            }
        } catch (const json::exception&) {
            throw ConfigError(source + ": " + key + ": wrong type");
        }
    }
    cfg.validate();
    return cfg;
}

std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.begin(), logits.end());
    if (p.empty()) return p;
    const double mx = *std::max_element(p.begin(), p.end());
    double sum = 0.0;
    for (auto& v : p) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (auto& v : p) v /= sum;
    return p;
}

int argmax(std::span<const double> values) {
    int best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

struct CnnModel::Workspace {
    std::vector<double> x;
    std::vector<double> conv_z;
    std::vector<double> pool;
    std::vector<int> pool_idx;
    std::vector<std::vector<double>> z;     // dense pre-activation
    std::vector<std::vector<double>> act;   // dense activation before dropout
    std::vector<std::vector<double>> h;     // dense output after dropout
    std::vector<std::vector<double>> mask;  // dropout scale per unit
    std::vector<double> logits;
    std::vector<double> delta;
    std::vector<double> delta_in;
};

namespace {

// NaN must survive the activation so a diverged model shows up in the loss.
double activate(Activation a, double z) {
    if (a == Activation::tanh) return std::tanh(z);
    return z > 0.0 || std::isnan(z) ? z : 0.0;
}

// Derivative expressed through the pre-activation and the activation value.
double activate_grad(Activation a, double z, double y) { return a == Activation::relu ? (z > 0.0 ? 1.0 : 0.0) : 1.0 - y * y; }

}  // namespace

CnnModel::CnnModel(int sequence_length, int n_classes, const CnnConfig& cfg)
    : sequence_length_(sequence_length), n_classes_(n_classes), cfg_(cfg) {
    cfg_.validate();
    if (sequence_length < 1) throw ConfigError("sequence_length: must be >= 1");
    if (n_classes < 1) throw ConfigError("n_classes: must be >= 1");
    std::size_t offset = 0;
    auto add = [&](int in, int out) {
        Layer l;
        l.in = in;
        l.out = out;
        l.w = offset;
        offset += static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
        l.b = offset;
        offset += static_cast<std::size_t>(out);
        return l;
    };
    conv_ = add(cfg_.kernel_size, cfg_.conv_filters);
    int in = cfg_.conv_filters;
    for (int i = 0; i < cfg_.fc_layers; ++i) {
        dense_.push_back(add(in, cfg_.fc_neurons));
        in = cfg_.fc_neurons;
    }
    output_ = add(in, n_classes_);
    params_.assign(offset, 0.0);
    Rng rng(derive_seed(cfg_.seed, {0x1417}));
    init_parameters(rng);
}

std::size_t CnnModel::padded_length() const noexcept {
    return static_cast<std::size_t>(std::max(sequence_length_, cfg_.kernel_size));
}

std::span<double> CnnModel::output_parameters() noexcept {
    return std::span<double>(params_).subspan(output_.w, params_.size() - output_.w);
}

void CnnModel::init_parameters(Rng& rng) {
    auto fill = [&](const Layer& l, bool he) {
        const double limit = he ? std::sqrt(6.0 / l.in) : std::sqrt(6.0 / (l.in + l.out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        const std::size_t n = static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out);
        for (std::size_t i = 0; i < n; ++i) params_[l.w + i] = dist(rng);
    };
    const bool he = cfg_.activation == Activation::relu;
    fill(conv_, he);
    for (const auto& l : dense_) fill(l, he);
    fill(output_, false);
}

void CnnModel::forward(std::span<const double> input, Workspace& ws, Rng* dropout_rng) const {
    const auto P = padded_length();
    const auto K = static_cast<std::size_t>(cfg_.kernel_size);
    const auto F = static_cast<std::size_t>(cfg_.conv_filters);
    const std::size_t L = P - K + 1;

    ws.x.resize(P);
    const std::size_t pad = P - input.size();
    const std::size_t left = pad / 2;
    for (std::size_t i = 0; i < P; ++i) {
        const std::size_t src = i < left ? 0 : std::min(i - left, input.size() - 1);
        ws.x[i] = input[src];
    }

    ws.conv_z.resize(F * L);
    ws.pool.resize(F);
    ws.pool_idx.resize(F);
    for (std::size_t f = 0; f < F; ++f) {
        const double* w = &params_[conv_.w + f * K];
        double best = -INFINITY;
        int best_p = 0;
        for (std::size_t p = 0; p < L; ++p) {
            double z = params_[conv_.b + f];
            for (std::size_t k = 0; k < K; ++k) z += w[k] * ws.x[p + k];
            ws.conv_z[f * L + p] = z;
            const double a = activate(cfg_.activation, z);
            if (a > best || (std::isnan(a) && !std::isnan(best))) {
                best = a;
                best_p = static_cast<int>(p);
            }
        }
        ws.pool[f] = best;
        ws.pool_idx[f] = best_p;
    }

    const std::size_t D = dense_.size();
    ws.z.resize(D);
    ws.act.resize(D);
    ws.h.resize(D);
    ws.mask.resize(D);
    const double keep = 1.0 - cfg_.dropout_rate;
    std::bernoulli_distribution drop_keep(keep);
    const std::vector<double>* in = &ws.pool;
    for (std::size_t l = 0; l < D; ++l) {
        const Layer& layer = dense_[l];
        const auto out = static_cast<std::size_t>(layer.out);
        const auto n_in = static_cast<std::size_t>(layer.in);
        ws.z[l].resize(out);
        ws.act[l].resize(out);
        ws.h[l].resize(out);
        ws.mask[l].assign(out, 1.0);
        for (std::size_t j = 0; j < out; ++j) {
            const double* w = &params_[layer.w + j * n_in];
            double z = params_[layer.b + j];
            for (std::size_t i = 0; i < n_in; ++i) z += w[i] * (*in)[i];
            ws.z[l][j] = z;
            ws.act[l][j] = activate(cfg_.activation, z);
            if (dropout_rng && cfg_.dropout_rate > 0.0) ws.mask[l][j] = drop_keep(*dropout_rng) ? 1.0 / keep : 0.0;
            ws.h[l][j] = ws.act[l][j] * ws.mask[l][j];
        }
        in = &ws.h[l];
    }

    const auto C = static_cast<std::size_t>(output_.out);
    const auto n_in = static_cast<std::size_t>(output_.in);
    ws.logits.resize(C);
    for (std::size_t c = 0; c < C; ++c) {
        const double* w = &params_[output_.w + c * n_in];
        double z = params_[output_.b + c];
        for (std::size_t i = 0; i < n_in; ++i) z += w[i] * (*in)[i];
        ws.logits[c] = z;
    }
}

// Accumulates d(cross-entropy)/d(params) for one sample into `grad`.
void CnnModel::backward(int label, Workspace& ws, std::vector<double>& grad) const {
    const auto probs = softmax(ws.logits);
    const auto C = static_cast<std::size_t>(output_.out);
    ws.delta.assign(C, 0.0);
    for (std::size_t c = 0; c < C; ++c) ws.delta[c] = probs[c] - (static_cast<int>(c) == label ? 1.0 : 0.0);

    const std::vector<double>& last = dense_.empty() ? ws.pool : ws.h.back();
    auto dense_backward = [&](const Layer& layer, const std::vector<double>& input) {
        const auto out = static_cast<std::size_t>(layer.out);
        const auto n_in = static_cast<std::size_t>(layer.in);
        ws.delta_in.assign(n_in, 0.0);
        for (std::size_t j = 0; j < out; ++j) {
            const double d = ws.delta[j];
            if (d == 0.0) continue;
            const double* w = &params_[layer.w + j * n_in];
            double* gw = &grad[layer.w + j * n_in];
            for (std::size_t i = 0; i < n_in; ++i) {
                gw[i] += d * input[i];
                ws.delta_in[i] += w[i] * d;
            }
            grad[layer.b + j] += d;
        }
    };

    dense_backward(output_, last);
    for (std::size_t l = dense_.size(); l-- > 0;) {
        ws.delta.swap(ws.delta_in);
        for (std::size_t j = 0; j < ws.delta.size(); ++j) {
            ws.delta[j] *= ws.mask[l][j] * activate_grad(cfg_.activation, ws.z[l][j], ws.act[l][j]);
        }
        dense_backward(dense_[l], l == 0 ? ws.pool : ws.h[l - 1]);
    }

    // Max pooling routes the gradient to the winning position only.
    const auto K = static_cast<std::size_t>(cfg_.kernel_size);
    const std::size_t L = padded_length() - K + 1;
    for (std::size_t f = 0; f < ws.pool.size(); ++f) {
        const auto p = static_cast<std::size_t>(ws.pool_idx[f]);
        const double z = ws.conv_z[f * L + p];
        const double d = ws.delta_in[f] * activate_grad(cfg_.activation, z, ws.pool[f]);
        if (d == 0.0) continue;
        for (std::size_t k = 0; k < K; ++k) grad[conv_.w + f * K + k] += d * ws.x[p + k];
        grad[conv_.b + f] += d;
    }
}

std::vector<double> CnnModel::logits(std::span<const double> input) const {
    if (static_cast<int>(input.size()) != sequence_length_) {
        throw ConfigError("input length " + std::to_string(input.size()) + " does not match model sequence length " +
                          std::to_string(sequence_length_));
    }
    Workspace ws;
    forward(input, ws, nullptr);
    return ws.logits;
}

std::vector<double> CnnModel::probabilities(std::span<const double> input) const { return softmax(logits(input)); }

double CnnModel::fit(std::span<const std::vector<double>> rows, std::span<const int> labels, Rng& rng) {
    if (rows.size() != labels.size()) throw ConfigError("fit: rows and labels differ in size");
    if (rows.empty()) throw ConfigError("fit: empty training set");
    for (const auto& r : rows) {
        if (static_cast<int>(r.size()) != sequence_length_) throw ConfigError("fit: row length mismatch");
    }
    for (int y : labels) {
        if (y < 0 || y >= n_classes_) throw ConfigError("fit: label out of range");
    }

    const std::size_t n_params = params_.size();
    std::vector<double> grad(n_params);
    std::vector<double> m(n_params, 0.0);
    std::vector<double> v(n_params, 0.0);
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    constexpr double rho = 0.9;
    std::uint64_t step = 0;

    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Workspace ws;
    const auto batch = static_cast<std::size_t>(cfg_.batch_size);
    double epoch_loss = 0.0;

    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch) {
            const std::size_t end = std::min(order.size(), start + batch);
            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t s = start; s < end; ++s) {
                const std::size_t i = order[s];
                forward(rows[i], ws, &rng);
                const double mx = *std::max_element(ws.logits.begin(), ws.logits.end());
                double lse = 0.0;
                for (double z : ws.logits) lse += std::exp(z - mx);
                batch_loss += mx + std::log(lse) - ws.logits[static_cast<std::size_t>(labels[i])];
                backward(labels[i], ws, grad);
            }
            if (!std::isfinite(batch_loss)) {
                throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                                    std::to_string(start) + " (lr=" + std::to_string(cfg_.learning_rate) + ")");
            }
            epoch_loss += batch_loss;
            const double scale = 1.0 / static_cast<double>(end - start);
            ++step;
            const double lr = cfg_.learning_rate;
            switch (cfg_.optimizer) {
                case Optimizer::adam: {
                    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
                    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
                    for (std::size_t p = 0; p < n_params; ++p) {
                        const double g = grad[p] * scale;
                        m[p] = beta1 * m[p] + (1.0 - beta1) * g;
                        v[p] = beta2 * v[p] + (1.0 - beta2) * g * g;
                        params_[p] -= lr * (m[p] / c1) / (std::sqrt(v[p] / c2) + eps);
                    }
                    break;
                }
                case Optimizer::rmsprop:
                    for (std::size_t p = 0; p < n_params; ++p) {
                        const double g = grad[p] * scale;
                        v[p] = rho * v[p] + (1.0 - rho) * g * g;
                        params_[p] -= lr * g / (std::sqrt(v[p]) + eps);
                    }
                    break;
                case Optimizer::sgd:
                    for (std::size_t p = 0; p < n_params; ++p) params_[p] -= lr * grad[p] * scale;
                    break;
            }
        }
        epoch_loss /= static_cast<double>(order.size());
    }
    return epoch_loss;
}

}  // namespace dnt::classifier
