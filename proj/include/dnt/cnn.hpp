#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "dnt/rng.hpp"

namespace dnt::classifier {

enum class Activation { relu, tanh };
enum class Optimizer { adam, sgd, rmsprop };

/// Hyperparameters of the timing-sequence CNN. Defaults are the tuned configuration:
/// relu, Adam, dropout 0.1, 60 epochs, 32 filters, 2 dense layers of 50 units.
struct CnnConfig {
    Activation activation = Activation::relu;
    Optimizer optimizer = Optimizer::adam;
    double dropout_rate = 0.1;
    int epochs = 60;
    int conv_filters = 32;
    int kernel_size = 3;
    int fc_layers = 2;
    int fc_neurons = 50;
    int batch_size = 32;
    double learning_rate = 0.001;
    std::uint64_t seed = 0;

    void validate() const;
    std::string to_json() const;
    static CnnConfig from_json(const std::string& text, const std::string& source = "<cnn config>");
};

std::string to_string(Activation a);
std::string to_string(Optimizer o);

/// Raised when the training loss stops being finite.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 1-D CNN: conv(kernel k, F filters) -> activation -> global max pool ->
/// fc_layers x (dense -> activation -> dropout) -> dense -> softmax.
/// Inputs shorter than the kernel are edge-padded on both sides.
class CnnModel {
public:
    CnnModel(int sequence_length, int n_classes, const CnnConfig& cfg);

    int sequence_length() const noexcept { return sequence_length_; }
    int n_classes() const noexcept { return n_classes_; }
    const CnnConfig& config() const noexcept { return cfg_; }

    /// Inference-mode logits (dropout disabled).
    std::vector<double> logits(std::span<const double> input) const;
    std::vector<double> probabilities(std::span<const double> input) const;

    /// Minibatch training on already-normalized rows. Returns the final epoch's mean loss.
    double fit(std::span<const std::vector<double>> rows, std::span<const int> labels, Rng& rng);

    /// Flat parameter storage (conv, dense layers, output), exposed for tests and serialization.
    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }
    /// The output layer's weights and biases as a sub-span of parameters().
    std::span<double> output_parameters() noexcept;

    std::size_t padded_length() const noexcept;

private:
    struct Layer {
        std::size_t w = 0;  // offset of weights, row-major [out][in]
        std::size_t b = 0;  // offset of biases
        int in = 0;
        int out = 0;
    };
    struct Workspace;

    void forward(std::span<const double> input, Workspace& ws, Rng* dropout_rng) const;
    void backward(int label, Workspace& ws, std::vector<double>& grad) const;
    void init_parameters(Rng& rng);

    int sequence_length_;
    int n_classes_;
    CnnConfig cfg_;
    Layer conv_;
    std::vector<Layer> dense_;
    Layer output_;
    std::vector<double> params_;
};

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);
/// Index of the largest value; ties resolve to the lowest index.
int argmax(std::span<const double> values);

}  // namespace dnt::classifier
