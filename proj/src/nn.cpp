#include "gm/nn.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "gm/displacement.hpp"

namespace gm::nn {

Network::Network(const FiniteGroup& input_group, int input_channels)
    : input_group_(&input_group),
      input_channels_(input_channels),
      channels_(input_channels),
      length_(input_group.order()) {
    if (input_channels <= 0) throw std::invalid_argument("channel count must be positive");
}

void Network::add_conv(GmConvLayer layer, bool residual) {
    if (dense_output_) throw std::invalid_argument("cannot add layers after a dense readout");
    if (layer.in_channels != channels_)
        throw std::invalid_argument("conv in_channels does not match the running shape");
    if (layer.n() != length_)
        throw std::invalid_argument("conv group order does not match the running length");
    if (residual && layer.out_channels != channels_)
        throw std::invalid_argument("residual conv must preserve the channel count");
    channels_ = layer.out_channels;
    layers_.push_back(Layer{std::move(layer), residual});
}

void Network::add_pool(GmPoolLayer layer) {
    if (dense_output_) throw std::invalid_argument("cannot add layers after a dense readout");
    if (layer.channels != channels_)
        throw std::invalid_argument("pool channels do not match the running shape");
    if (layer.partition.subgroup.parent().order() != length_)
        throw std::invalid_argument("pool group order does not match the running length");
    length_ = layer.partition.subgroup.order();
    on_input_group_ = false;
    layers_.push_back(Layer{std::move(layer), false});
}

void Network::add_stride(StrideLayer layer) {
    if (dense_output_) throw std::invalid_argument("cannot add layers after a dense readout");
    if (layer.conv.in_channels != channels_)
        throw std::invalid_argument("stride in_channels does not match the running shape");
    if (layer.conv.n() != length_)
        throw std::invalid_argument("stride group order does not match the running length");
    channels_ = layer.conv.out_channels;
    length_ = layer.subgroup.order();
    on_input_group_ = false;
    layers_.push_back(Layer{std::move(layer), false});
}

void Network::add_prelu() {
    if (dense_output_) throw std::invalid_argument("cannot add layers after a dense readout");
    PReluLayer layer;
    layer.channels = channels_;
    layer.alpha.assign(channels_, 0.25);
    layers_.push_back(Layer{std::move(layer), false});
}

void Network::add_dense(int out_dim, std::mt19937_64* rng) {
    if (dense_output_) throw std::invalid_argument("cannot add layers after a dense readout");
    if (out_dim <= 0) throw std::invalid_argument("dense output dimension must be positive");
    DenseLayer layer;
    layer.in_channels = channels_;
    layer.in_len = length_;
    layer.out_dim = out_dim;
    layer.weight.assign(static_cast<std::size_t>(out_dim) * channels_ * length_, 0.0);
    layer.bias.assign(out_dim, 0.0);
    if (rng) {
        double bound = std::sqrt(1.0 / (static_cast<double>(channels_) * length_));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (double& w : layer.weight) w = dist(*rng);
    }
    channels_ = 1;
    length_ = out_dim;
    on_input_group_ = false;
    dense_output_ = true;
    layers_.push_back(Layer{std::move(layer), false});
}

namespace {

Channels prelu_forward(const PReluLayer& layer, const Channels& x) {
    Channels y = x;
    for (int c = 0; c < layer.channels; ++c)
        for (Eigen::Index i = 0; i < y[c].size(); ++i)
            if (y[c](i) <= 0.0) y[c](i) *= layer.alpha[c];
    return y;
}

Channels dense_forward(const DenseLayer& layer, const Channels& x) {
    Eigen::VectorXd out(layer.out_dim);
    for (int k = 0; k < layer.out_dim; ++k) {
        double acc = layer.bias[k];
        const double* row =
            &layer.weight[static_cast<std::size_t>(k) * layer.in_channels * layer.in_len];
        for (int c = 0; c < layer.in_channels; ++c)
            for (int i = 0; i < layer.in_len; ++i)
                acc += row[c * layer.in_len + i] * x[c](i);
        out(k) = acc;
    }
    return Channels{std::move(out)};
}

}  // namespace

Channels Network::forward(const Channels& x, std::vector<Channels>* caches, Exec exec) const {
    if (caches) caches->clear();
    Channels cur = x;
    for (const Layer& layer : layers_) {
        if (caches) caches->push_back(cur);
        Channels next;
        if (const auto* conv = std::get_if<GmConvLayer>(&layer.impl)) {
            next = conv_forward(*conv, cur, exec);
            if (layer.residual)
                for (std::size_t c = 0; c < next.size(); ++c) next[c] += cur[c];
        } else if (const auto* pool = std::get_if<GmPoolLayer>(&layer.impl)) {
            next = pool_forward(*pool, cur, exec);
        } else if (const auto* stride = std::get_if<StrideLayer>(&layer.impl)) {
            next = stride_forward(*stride, cur, exec);
        } else if (const auto* prelu = std::get_if<PReluLayer>(&layer.impl)) {
            next = prelu_forward(*prelu, cur);
        } else {
            next = dense_forward(std::get<DenseLayer>(layer.impl), cur);
        }
        cur = std::move(next);
    }
    return cur;
}

Channels Network::backward(const std::vector<Channels>& caches, const Channels& dout,
                           std::vector<std::vector<double>>& grads, Exec exec) const {
    if (caches.size() != layers_.size())
        throw std::invalid_argument("cache count does not match the layer count");
    Channels dcur = dout;
    std::size_t block = 0;
    for (const Layer& layer : layers_) {
        if (std::holds_alternative<GmConvLayer>(layer.impl))
            block += 3;
        else if (std::holds_alternative<StrideLayer>(layer.impl))
            block += 1;
        else if (std::holds_alternative<PReluLayer>(layer.impl))
            block += 1;
        else if (std::holds_alternative<DenseLayer>(layer.impl))
            block += 2;
    }
    if (grads.size() != block) throw std::invalid_argument("gradient buffer shape mismatch");

    for (std::size_t li = layers_.size(); li-- > 0;) {
        const Layer& layer = layers_[li];
        const Channels& x = caches[li];
        if (const auto* conv = std::get_if<GmConvLayer>(&layer.impl)) {
            block -= 3;
            ConvGrads g = conv_backward(*conv, x, dcur, exec);
            for (std::size_t i = 0; i < g.dw.size(); ++i) grads[block][i] += g.dw[i];
            for (std::size_t i = 0; i < g.derror_full.size(); ++i)
                grads[block + 1][i] += g.derror_full[i];
            for (std::size_t i = 0; i < g.derror_ldr.size(); ++i)
                grads[block + 2][i] += g.derror_ldr[i];
            if (layer.residual)
                for (std::size_t c = 0; c < g.dx.size(); ++c) g.dx[c] += dcur[c];
            dcur = std::move(g.dx);
        } else if (const auto* pool = std::get_if<GmPoolLayer>(&layer.impl)) {
            dcur = pool_backward(*pool, x, dcur, exec);
        } else if (const auto* stride = std::get_if<StrideLayer>(&layer.impl)) {
            block -= 1;
            StrideGrads g = stride_backward(*stride, x, dcur, exec);
            for (std::size_t i = 0; i < g.dw.size(); ++i) grads[block][i] += g.dw[i];
            dcur = std::move(g.dx);
        } else if (const auto* prelu = std::get_if<PReluLayer>(&layer.impl)) {
            block -= 1;
            Channels dx(prelu->channels);
            for (int c = 0; c < prelu->channels; ++c) {
                dx[c] = dcur[c];
                double dalpha = 0.0;
                for (Eigen::Index i = 0; i < x[c].size(); ++i)
                    if (x[c](i) <= 0.0) {
                        dalpha += x[c](i) * dcur[c](i);
                        dx[c](i) *= prelu->alpha[c];
                    }
                grads[block][c] += dalpha;
            }
            dcur = std::move(dx);
        } else {
            block -= 2;
            const auto& dense = std::get<DenseLayer>(layer.impl);
            Channels dx(dense.in_channels, Eigen::VectorXd::Zero(dense.in_len));
            for (int k = 0; k < dense.out_dim; ++k) {
                double d = dcur[0](k);
                grads[block + 1][k] += d;
                std::size_t base = static_cast<std::size_t>(k) * dense.in_channels * dense.in_len;
                for (int c = 0; c < dense.in_channels; ++c)
                    for (int i = 0; i < dense.in_len; ++i) {
                        grads[block][base + c * dense.in_len + i] += d * x[c](i);
                        dx[c](i) += dense.weight[base + c * dense.in_len + i] * d;
                    }
            }
            dcur = std::move(dx);
        }
    }
    return dcur;
}

std::vector<std::vector<double>*> Network::param_blocks() {
    std::vector<std::vector<double>*> blocks;
    for (Layer& layer : layers_) {
        if (auto* conv = std::get_if<GmConvLayer>(&layer.impl)) {
            blocks.push_back(&conv->weights);
            blocks.push_back(&conv->error_full);
            blocks.push_back(&conv->error_ldr);
        } else if (auto* stride = std::get_if<StrideLayer>(&layer.impl)) {
            blocks.push_back(&stride->conv.weights);
        } else if (auto* prelu = std::get_if<PReluLayer>(&layer.impl)) {
            blocks.push_back(&prelu->alpha);
        } else if (auto* dense = std::get_if<DenseLayer>(&layer.impl)) {
            blocks.push_back(&dense->weight);
            blocks.push_back(&dense->bias);
        }
    }
    return blocks;
}

std::vector<std::vector<double>> Network::zero_grads() const {
    std::vector<std::vector<double>> grads;
    for (const Layer& layer : layers_) {
        if (const auto* conv = std::get_if<GmConvLayer>(&layer.impl)) {
            grads.emplace_back(conv->weights.size(), 0.0);
            grads.emplace_back(conv->error_full.size(), 0.0);
            grads.emplace_back(conv->error_ldr.size(), 0.0);
        } else if (const auto* stride = std::get_if<StrideLayer>(&layer.impl)) {
            grads.emplace_back(stride->conv.weights.size(), 0.0);
        } else if (const auto* prelu = std::get_if<PReluLayer>(&layer.impl)) {
            grads.emplace_back(prelu->alpha.size(), 0.0);
        } else if (const auto* dense = std::get_if<DenseLayer>(&layer.impl)) {
            grads.emplace_back(dense->weight.size(), 0.0);
            grads.emplace_back(dense->bias.size(), 0.0);
        }
    }
    return grads;
}

std::size_t Network::param_count() const {
    std::size_t count = 0;
    for (const Layer& layer : layers_) {
        if (const auto* conv = std::get_if<GmConvLayer>(&layer.impl))
            count += conv->param_count();
        else if (const auto* stride = std::get_if<StrideLayer>(&layer.impl))
            count += stride->conv.weights.size();
        else if (const auto* prelu = std::get_if<PReluLayer>(&layer.impl))
            count += prelu->alpha.size();
        else if (const auto* dense = std::get_if<DenseLayer>(&layer.impl))
            count += dense->weight.size() + dense->bias.size();
    }
    return count;
}

double mse_loss(const Channels& pred, const Channels& target, Channels* grad) {
    if (pred.size() != target.size()) throw std::invalid_argument("channel count mismatch");
    double total = 0.0;
    std::size_t entries = 0;
    for (std::size_t c = 0; c < pred.size(); ++c) {
        total += (pred[c] - target[c]).squaredNorm();
        entries += pred[c].size();
    }
    total /= static_cast<double>(entries);
    if (grad) {
        grad->clear();
        for (std::size_t c = 0; c < pred.size(); ++c)
            grad->push_back(2.0 * (pred[c] - target[c]) / static_cast<double>(entries));
    }
    return total;
}

double cross_entropy_loss(const Eigen::VectorXd& logits, int label, Eigen::VectorXd* grad) {
    double mx = logits.maxCoeff();
    Eigen::VectorXd p = (logits.array() - mx).exp();
    p /= p.sum();
    if (grad) {
        *grad = p;
        (*grad)(label) -= 1.0;
    }
    return -std::log(std::max(p(label), 1e-300));
}

void Optimizer::step(std::vector<std::vector<double>*>& params,
                     const std::vector<std::vector<double>>& grads) {
    if (params.size() != grads.size())
        throw std::invalid_argument("parameter/gradient block mismatch");
    if (cfg_.kind == "sgd") {
        for (std::size_t b = 0; b < params.size(); ++b)
            for (std::size_t i = 0; i < params[b]->size(); ++i) {
                double& p = (*params[b])[i];
                p -= cfg_.lr * (grads[b][i] + cfg_.weight_decay * p);
            }
        return;
    }
    if (cfg_.kind != "adam") throw std::invalid_argument("unknown optimizer: " + cfg_.kind);
    if (m_.empty()) {
        for (const auto& g : grads) {
            m_.emplace_back(g.size(), 0.0);
            v_.emplace_back(g.size(), 0.0);
        }
    }
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t b = 0; b < params.size(); ++b)
        for (std::size_t i = 0; i < params[b]->size(); ++i) {
            double g = grads[b][i];
            m_[b][i] = cfg_.beta1 * m_[b][i] + (1.0 - cfg_.beta1) * g;
            v_[b][i] = cfg_.beta2 * v_[b][i] + (1.0 - cfg_.beta2) * g * g;
            double mhat = m_[b][i] / bc1;
            double vhat = v_[b][i] / bc2;
            double& p = (*params[b])[i];
            // Decoupled weight decay, AdamW style.
            p -= cfg_.lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * p);
        }
}

namespace {

Eigen::VectorXd gaussian_vector(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> dist;
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = dist(rng);
    return v;
}

Eigen::MatrixXd hidden_conv_map(const FiniteGroup& group, int radius, std::mt19937_64& rng) {
    Eigen::VectorXd phi = Eigen::VectorXd::Zero(group.order());
    for (ElementId e : word_ball(group, radius)) phi(e) = gaussian_vector(1, rng)(0);
    return densify(gm_from_coeffs(group, phi));
}

// Rank-limited perturbation orthogonal to the group-matrix subspace:
// project a random matrix off the subspace, truncate by SVD, rescale.
Eigen::MatrixXd offgm_perturbation(const FiniteGroup& group, int rank, double norm,
                                   std::mt19937_64& rng) {
    const int n = group.order();
    Eigen::MatrixXd r(n, n);
    for (int i = 0; i < n; ++i) r.row(i) = gaussian_vector(n, rng).transpose();
    Eigen::MatrixXd perp = r - densify(distance_to_gm(r, group).projection);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(perp, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::MatrixXd trunc = Eigen::MatrixXd::Zero(n, n);
    for (int k = 0; k < std::min(rank, static_cast<int>(svd.singularValues().size())); ++k)
        trunc += svd.singularValues()(k) * svd.matrixU().col(k) * svd.matrixV().col(k).transpose();
    double scale = trunc.norm();
    if (scale == 0.0) return trunc;
    return trunc * (norm / scale);
}

}  // namespace

Dataset make_task(const FiniteGroup& group, const SyntheticTask& task) {
    if (task.samples <= 1) throw std::invalid_argument("task needs at least two samples");
    Dataset data;
    std::mt19937_64 map_rng(task.seed ^ 0x6d61702d726e67ULL);
    std::mt19937_64 data_rng(task.seed ^ 0x646174612d726eULL);
    const int n = group.order();

    if (task.kind == TaskKind::InvariantClassification) {
        data.classification = true;
        std::vector<Eigen::VectorXd> prototypes;
        for (int c = 0; c < task.classes; ++c) prototypes.push_back(gaussian_vector(n, map_rng));
        std::uniform_int_distribution<int> pick_class(0, task.classes - 1);
        std::uniform_int_distribution<ElementId> pick_g(0, static_cast<ElementId>(n - 1));
        for (int s = 0; s < task.samples; ++s) {
            int c = pick_class(data_rng);
            ElementId g = pick_g(data_rng);
            Eigen::VectorXd x = translate(group, g, prototypes[c]);
            if (task.noise > 0.0) x += task.noise * gaussian_vector(n, data_rng);
            data.inputs.push_back(Channels{std::move(x)});
            data.labels.push_back(c);
        }
    } else {
        Eigen::MatrixXd map = hidden_conv_map(group, task.support_radius, map_rng);
        if (task.kind == TaskKind::PerturbedGconv && task.sigma > 0.0)
            map += offgm_perturbation(group, task.rank, task.sigma * map.norm(), map_rng);
        data.target_map = map;
        for (int s = 0; s < task.samples; ++s) {
            Eigen::VectorXd x = gaussian_vector(n, data_rng);
            data.inputs.push_back(Channels{x});
            data.targets.push_back(Channels{map * x});
        }
    }
    int test = std::max(1, static_cast<int>(task.samples * task.test_fraction));
    data.train_count = task.samples - test;
    return data;
}

double network_symmetry_error(const Network& net, const std::vector<Channels>& inputs) {
    const FiniteGroup& g = net.input_group();
    if (net.output_on_input_group()) {
        return equivariance_error(
            [&](const Channels& x) { return net.forward(x); }, g, inputs);
    }
    // Invariance deviation of the (pooled/strided/readout) outputs.
    double total = 0.0;
    std::size_t count = 0;
    for (const Channels& x : inputs) {
        Channels fx = net.forward(x);
        for (ElementId e = 0; e < static_cast<ElementId>(g.order()); ++e) {
            Channels fgx = net.forward(translate(g, e, x));
            double num = 0.0, den = 0.0;
            for (std::size_t c = 0; c < fx.size(); ++c) {
                num += (fgx[c] - fx[c]).squaredNorm();
                den += fgx[c].squaredNorm();
            }
            total += std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
            ++count;
        }
    }
    return count ? total / static_cast<double>(count) : 0.0;
}

TrainResult train_network(Network& net, const Dataset& data, const TrainConfig& cfg) {
    const int total = static_cast<int>(data.inputs.size());
    const int train_n = data.train_count;
    if (train_n <= 0 || train_n >= total)
        throw std::invalid_argument("dataset split leaves an empty train or test set");

    Optimizer opt(cfg.optimizer);
    auto params = net.param_blocks();
    std::mt19937_64 shuffle_rng(cfg.seed ^ 0x7368756666ULL);

    auto item_loss = [&](int idx, Channels* grad) {
        std::vector<Channels> caches;
        Channels out = net.forward(data.inputs[idx], grad ? &caches : nullptr);
        double loss;
        Channels dloss;
        if (data.classification) {
            Eigen::VectorXd dlogits;
            loss = cross_entropy_loss(out[0], data.labels[idx], grad ? &dlogits : nullptr);
            if (grad) dloss.push_back(std::move(dlogits));
        } else {
            loss = mse_loss(out, data.targets[idx], grad ? &dloss : nullptr);
        }
        if (grad) *grad = std::move(dloss);
        return std::make_pair(loss, std::move(caches));
    };

    auto eval_split = [&](int begin, int end) {
        double acc = 0.0;
        for (int i = begin; i < end; ++i) acc += item_loss(i, nullptr).first;
        return acc / std::max(1, end - begin);
    };

    std::vector<Channels> equiv_inputs;
    for (int i = train_n; i < std::min(total, train_n + cfg.equiv_samples); ++i)
        equiv_inputs.push_back(data.inputs[i]);

    TrainResult result;
    result.param_count = net.param_count();
    double best_val = std::numeric_limits<double>::infinity();
    int stale = 0;

    std::vector<int> order(train_n);
    std::iota(order.begin(), order.end(), 0);
    const int batch = cfg.batch_size > 0 ? std::min(cfg.batch_size, train_n) : train_n;

    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        auto started = std::chrono::steady_clock::now();
        if (cfg.batch_size > 0) std::shuffle(order.begin(), order.end(), shuffle_rng);

        double train_loss = 0.0;
        for (int start = 0; start < train_n; start += batch) {
            int stop = std::min(train_n, start + batch);
            auto grads = net.zero_grads();
            for (int bi = start; bi < stop; ++bi) {
                Channels dloss;
                std::vector<Channels> caches;
                Channels out = net.forward(data.inputs[order[bi]], &caches);
                double loss;
                if (data.classification) {
                    Eigen::VectorXd dlogits;
                    loss = cross_entropy_loss(out[0], data.labels[order[bi]], &dlogits);
                    dloss.push_back(std::move(dlogits));
                } else {
                    loss = mse_loss(out, data.targets[order[bi]], &dloss);
                }
                train_loss += loss;
                double scale = 1.0 / (stop - start);
                for (auto& d : dloss) d *= scale;
                net.backward(caches, dloss, grads);
            }
            opt.step(params, grads);
        }
        train_loss /= train_n;

        double val_loss = eval_split(train_n, total);
        double equiv = network_symmetry_error(net, equiv_inputs);
        double wall_ms = std::chrono::duration<double, std::milli>(
                             std::chrono::steady_clock::now() - started)
                             .count();
        result.history.push_back(EpochRow{epoch, train_loss, val_loss, equiv, wall_ms});

        if (val_loss < best_val - 1e-15) {
            best_val = val_loss;
            stale = 0;
        } else if (cfg.patience > 0 && ++stale > cfg.patience) {
            break;
        }
    }

    result.final_train_loss = eval_split(0, train_n);
    result.final_val_loss = eval_split(train_n, total);
    result.equiv_error = network_symmetry_error(net, equiv_inputs);
    return result;
}

std::vector<SweepRow> run_equivariance_sweep(
    const FiniteGroup& group, const SyntheticTask& base_task,
    const std::vector<double>& levels,
    const std::vector<std::pair<std::string, ModelBuilder>>& models, const TrainConfig& cfg) {
    std::vector<SweepRow> rows;
    for (double level : levels) {
        SyntheticTask task = base_task;
        task.kind = level > 0.0 ? TaskKind::PerturbedGconv : TaskKind::ExactGconv;
        task.sigma = level;
        Dataset data = make_task(group, task);

        SweepRow row;
        row.level = level;
        for (const auto& [name, build] : models) {
            std::mt19937_64 init_rng(cfg.seed ^ std::hash<std::string>{}(name));
            Network net = build(init_rng);
            TrainResult result = train_network(net, data, cfg);
            row.models.push_back(SweepModelRow{name, result.equiv_error, result.final_val_loss});
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace gm::nn
