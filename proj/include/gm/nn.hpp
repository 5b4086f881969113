#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "gm/layers.hpp"

namespace gm::nn {

/// PReLU with one learnable slope per channel (initialized to 0.25).
struct PReluLayer {
    int channels = 1;
    std::vector<double> alpha;
};

/// Fully connected readout over the flattened channels.
struct DenseLayer {
    int in_channels = 1;
    int in_len = 1;
    int out_dim = 1;
    std::vector<double> weight;  // [out][in_channels*in_len], row-major
    std::vector<double> bias;    // [out]
};

struct Layer {
    std::variant<GmConvLayer, GmPoolLayer, StrideLayer, PReluLayer, DenseLayer> impl;
    bool residual = false;  // conv layers only, same shape in and out
};

/// A sequential stack with explicit per-layer gradients. Layer shapes are
/// validated as layers are added; pooling and striding switch the signal
/// to the subgroup index set.
class Network {
public:
    Network(const FiniteGroup& input_group, int input_channels);

    void add_conv(GmConvLayer layer, bool residual = false);
    void add_pool(GmPoolLayer layer);
    void add_stride(StrideLayer layer);
    void add_prelu();
    void add_dense(int out_dim, std::mt19937_64* rng = nullptr);

    const FiniteGroup& input_group() const { return *input_group_; }
    int input_channels() const { return input_channels_; }
    int output_channels() const { return channels_; }
    int output_length() const { return length_; }
    /// True while the signal is still indexed by the input group, so the
    /// translation-equivariance metric applies to the whole map.
    bool output_on_input_group() const { return on_input_group_; }

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }

    /// Forward pass; when caches is non-null it receives the input of
    /// each layer (used by backward).
    Channels forward(const Channels& x, std::vector<Channels>* caches = nullptr,
                     Exec exec = Exec::Parallel) const;

    /// Reverse-mode pass. `grads` must have the shape of zero_grads();
    /// parameter gradients are accumulated (+=). Returns d(loss)/d(input).
    Channels backward(const std::vector<Channels>& caches, const Channels& dout,
                      std::vector<std::vector<double>>& grads,
                      Exec exec = Exec::Parallel) const;

    std::vector<std::vector<double>*> param_blocks();
    std::vector<std::vector<double>> zero_grads() const;
    std::size_t param_count() const;

private:
    const FiniteGroup* input_group_;
    int input_channels_;
    std::vector<Layer> layers_;
    // Running output shape during construction.
    int channels_;
    int length_;
    bool on_input_group_ = true;
    bool dense_output_ = false;
};

/// Mean squared error over all channels and entries; grad gets
/// d(loss)/d(pred) when non-null.
double mse_loss(const Channels& pred, const Channels& target, Channels* grad = nullptr);

/// Softmax cross entropy on a logit vector.
double cross_entropy_loss(const Eigen::VectorXd& logits, int label,
                          Eigen::VectorXd* grad = nullptr);

struct OptimizerConfig {
    std::string kind = "adam";  // "adam" | "sgd"
    double lr = 0.003;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;  // decoupled
};

class Optimizer {
public:
    explicit Optimizer(OptimizerConfig cfg) : cfg_(std::move(cfg)) {}
    const OptimizerConfig& config() const { return cfg_; }
    void step(std::vector<std::vector<double>*>& params,
              const std::vector<std::vector<double>>& grads);

private:
    OptimizerConfig cfg_;
    std::vector<std::vector<double>> m_, v_;
    long t_ = 0;
};

enum class TaskKind { ExactGconv, PerturbedGconv, InvariantClassification };

/// Synthetic data generators. Regeneration with the same seed is
/// bit-identical.
struct SyntheticTask {
    TaskKind kind = TaskKind::ExactGconv;
    int samples = 256;
    double test_fraction = 0.25;
    int support_radius = 1;  // support of the hidden group-convolution map
    double sigma = 0.0;      // perturbation strength (PerturbedGconv)
    int rank = 1;            // perturbation rank (PerturbedGconv)
    int classes = 3;         // InvariantClassification
    double noise = 0.0;      // input noise (InvariantClassification)
    std::uint64_t seed = 0;
};

struct Dataset {
    std::vector<Channels> inputs;
    std::vector<Channels> targets;  // regression targets
    std::vector<int> labels;        // classification labels
    int train_count = 0;
    bool classification = false;
    Eigen::MatrixXd target_map;  // the hidden map (regression tasks)
};

Dataset make_task(const FiniteGroup& group, const SyntheticTask& task);

struct TrainConfig {
    OptimizerConfig optimizer;
    int batch_size = 0;  // 0 = full batch
    int max_epochs = 500;
    int patience = 0;  // early stop on val loss after this many stale epochs; 0 = off
    std::uint64_t seed = 0;
    int equiv_samples = 4;  // test samples for the per-epoch symmetry metric
};

struct EpochRow {
    int epoch;
    double train_loss;
    double val_loss;
    double equiv_error;
    double wall_ms;
};

struct TrainResult {
    std::vector<EpochRow> history;
    double final_train_loss = 0.0;
    double final_val_loss = 0.0;
    double equiv_error = 0.0;
    std::size_t param_count = 0;
};

TrainResult train_network(Network& net, const Dataset& data, const TrainConfig& cfg);

/// Translation-equivariance error of the whole network when its output is
/// still indexed by the input group; translation-invariance error of the
/// outputs otherwise.
double network_symmetry_error(const Network& net, const std::vector<Channels>& inputs);

struct SweepModelRow {
    std::string name;
    double equiv_error = 0.0;
    double test_loss = 0.0;
};

struct SweepRow {
    double level = 0.0;
    std::vector<SweepModelRow> models;
};

using ModelBuilder = std::function<Network(std::mt19937_64&)>;

/// Trains every named model on the base task at each perturbation level
/// (sigma = level) and reports test loss plus measured symmetry error.
std::vector<SweepRow> run_equivariance_sweep(
    const FiniteGroup& group, const SyntheticTask& base_task,
    const std::vector<double>& levels,
    const std::vector<std::pair<std::string, ModelBuilder>>& models, const TrainConfig& cfg);

}  // namespace gm::nn
