// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------


#ifndef NFTB_NEURAL_PREDICTOR_HPP
#define NFTB_NEURAL_PREDICTOR_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "features.hpp"
#include "io.hpp"
#include "normalizer.hpp"
#include "random.hpp"

#include <json.hpp>

namespace nftb
{
    using Eigen::MatrixXd;
    using Eigen::VectorXd;

    inline const std::vector<int> default_layer_widths = {128, 256, 512, 256, 64, 1};

    struct DenseLayer
    {
        MatrixXd weight; // out x in
        VectorXd bias;
    };

    // Feedforward regressor: hidden layers are affine -> LeakyReLU -> dropout, the output layer is
    // affine -> ReLU. Batches are stored column-wise (features x batch).
    struct FnnModel
    {
        int input_width = static_cast<int>(num_features);
        std::vector<DenseLayer> layers;
        double leaky_slope = 0.01;
        double dropout = 0.2;
        Normalizer normalizer;
        double min_prediction = 0.0; // s, floor on predicted lifetimes
        nlohmann::json train_config = nlohmann::json::object();

        std::vector<int> widths() const
        {
            std::vector<int> w;
            for (const auto &l : layers)
                w.push_back(static_cast<int>(l.weight.rows()));
            return w;
        }

        std::size_t parameter_count() const
        {
            std::size_t n = 0;
            for (const auto &l : layers)
                n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
            return n;
        }
    };

    // Uniform fan-in init with the LeakyReLU gain, zero biases.
    inline FnnModel make_model(int input_width, const std::vector<int> &widths, Rng &rng, double leaky_slope = 0.01,
                               double dropout = 0.2)
    {
        if (input_width < 1 || widths.empty())
            throw config_error("make_model: empty architecture");
        FnnModel m;
        m.input_width = input_width;
        m.leaky_slope = leaky_slope;
        m.dropout = dropout;
        const double gain = std::sqrt(2.0 / (1.0 + leaky_slope * leaky_slope));
        int fan_in = input_width;
        for (int w : widths)
        {
            if (w < 1)
                throw config_error("make_model: layer width must be >= 1");
            const double bound = gain * std::sqrt(3.0 / fan_in);
            std::uniform_real_distribution<double> dist(-bound, bound);
            DenseLayer l;
            l.weight.resize(w, fan_in);
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
                for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
                    l.weight(r, c) = dist(rng);
            l.bias = VectorXd::Zero(w);
            m.layers.push_back(std::move(l));
            fan_in = w;
        }
        return m;
    }

    // Zero output weights, output bias at the mean training label. Without this the ReLU output
    // is pushed below zero for every input by the first optimizer step and never recovers.
    inline void prime_output_layer(FnnModel &model, const VectorXd &train_labels)
    {
        if (model.layers.empty() || train_labels.size() == 0)
            throw std::invalid_argument("prime_output_layer: empty model or labels");
        auto &out = model.layers.back();
        out.weight.setZero();
        out.bias.setConstant(train_labels.mean());
    }

    enum class Mode
    {
        train,
        eval
    };

    struct ForwardCache
    {
        std::vector<MatrixXd> inputs; // input to layer l
        std::vector<MatrixXd> pre;    // affine output of layer l
        std::vector<MatrixXd> masks;  // scaled keep-masks of hidden layers (empty when no dropout)
        bool valid = false;
    };

    // Train mode draws inverted-dropout masks from `rng`; eval mode is deterministic.
    inline MatrixXd forward(const FnnModel &model, const MatrixXd &x, Mode mode, Rng *rng = nullptr,
                            ForwardCache *cache = nullptr)
    {
        if (x.rows() != model.input_width)
            throw std::invalid_argument("forward: input has " + std::to_string(x.rows()) + " rows, model expects " +
                                        std::to_string(model.input_width));
        const bool drop = mode == Mode::train && model.dropout > 0.0;
        if (drop && rng == nullptr)
            throw std::invalid_argument("forward: train mode with dropout needs an rng");
        if (cache)
        {
            cache->inputs.clear();
            cache->pre.clear();
            cache->masks.clear();
        }
        const double keep = 1.0 - model.dropout;
        std::bernoulli_distribution keep_draw(keep);

        MatrixXd a = x;
        const std::size_t n = model.layers.size();
        for (std::size_t l = 0; l < n; ++l)
        {
            const auto &layer = model.layers[l];
            MatrixXd z(layer.weight.rows(), a.cols());
            z.noalias() = layer.weight * a;
            z.colwise() += layer.bias;
            if (cache)
            {
                cache->inputs.push_back(std::move(a));
                cache->pre.push_back(z);
            }
            if (l + 1 == n)
            {
                a = z.cwiseMax(0.0);
            }
            else
            {
                const double slope = model.leaky_slope;
                a = z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
                if (drop)
                {
                    MatrixXd mask(a.rows(), a.cols());
                    for (Eigen::Index c = 0; c < mask.cols(); ++c)
                        for (Eigen::Index r = 0; r < mask.rows(); ++r)
                            mask(r, c) = keep_draw(*rng) ? 1.0 / keep : 0.0;
                    a.array() *= mask.array();
                    if (cache)
                        cache->masks.push_back(std::move(mask));
                }
            }
        }
        if (cache)
            cache->valid = true;
        return a;
    }

    struct LossResult
    {
        double loss = 0.0;
        VectorXd grad; // d(mean loss) / d(prediction)
    };

    // Mean smooth-L1 (Huber with transition beta) over the batch.
    inline LossResult smooth_l1(const VectorXd &pred, const VectorXd &target, double beta)
    {
        if (!(beta > 0.0))
            throw std::invalid_argument("smooth_l1: beta must be > 0");
        if (pred.size() != target.size() || pred.size() == 0)
            throw std::invalid_argument("smooth_l1: size mismatch");
        const double count = static_cast<double>(pred.size());
        LossResult r;
        r.grad.resize(pred.size());
        double total = 0.0;
        for (Eigen::Index i = 0; i < pred.size(); ++i)
        {
            const double e = pred[i] - target[i];
            if (std::abs(e) < beta)
            {
                total += 0.5 * e * e / beta;
                r.grad[i] = e / beta / count;
            }
            else
            {
                total += std::abs(e) - 0.5 * beta;
                r.grad[i] = (e > 0.0 ? 1.0 : -1.0) / count;
            }
        }
        r.loss = total / count;
        return r;
    }

    struct Gradients
    {
        std::vector<MatrixXd> weight;
        std::vector<VectorXd> bias;
    };

    // Exact gradients of the loss for every parameter, given the cache of a train-mode forward.
    // Subgradients at 0: LeakyReLU takes the negative slope, ReLU takes 0.
    inline Gradients backward(const FnnModel &model, const ForwardCache &cache, const MatrixXd &grad_output)
    {
        const std::size_t n = model.layers.size();
        if (!cache.valid || cache.inputs.size() != n || cache.pre.size() != n)
            throw std::logic_error("backward: missing or stale forward cache");
        const bool has_masks = !cache.masks.empty();
        if (has_masks && cache.masks.size() + 1 != n)
            throw std::logic_error("backward: dropout masks do not match the layer count");
        if (grad_output.rows() != cache.pre.back().rows() || grad_output.cols() != cache.pre.back().cols())
            throw std::invalid_argument("backward: output gradient shape mismatch");

        Gradients g;
        g.weight.resize(n);
        g.bias.resize(n);
        MatrixXd delta = grad_output.array() * (cache.pre.back().array() > 0.0).cast<double>();
        for (std::size_t l = n; l-- > 0;)
        {
            g.weight[l].noalias() = delta * cache.inputs[l].transpose();
            g.bias[l] = delta.rowwise().sum();
            if (l == 0)
                break;
            MatrixXd upstream(model.layers[l].weight.cols(), delta.cols());
            upstream.noalias() = model.layers[l].weight.transpose() * delta;
            if (has_masks)
                upstream.array() *= cache.masks[l - 1].array();
            const double slope = model.leaky_slope;
            delta = upstream.array() *
                    cache.pre[l - 1].unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; }).array();
        }
        return g;
    }

    struct AdamWConfig
    {
        double learning_rate = 1e-3;
        double weight_decay = 1e-5;
        double beta1 = 0.9;
        double beta2 = 0.999;
        double epsilon = 1e-8;
    };

    // Decoupled weight decay: p <- p - lr (m_hat / (sqrt(v_hat) + eps) + wd p).
    inline void adamw_update(Eigen::Ref<Eigen::ArrayXd> param, const Eigen::Ref<const Eigen::ArrayXd> &grad,
                             Eigen::Ref<Eigen::ArrayXd> m, Eigen::Ref<Eigen::ArrayXd> v, long step,
                             const AdamWConfig &cfg)
    {
        if (param.size() != grad.size() || m.size() != grad.size() || v.size() != grad.size())
            throw std::invalid_argument("adamw_update: shape mismatch");
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.square();
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
        param *= 1.0 - cfg.learning_rate * cfg.weight_decay;
        param -= cfg.learning_rate * (m / c1) / ((v / c2).sqrt() + cfg.epsilon);
    }

    struct OptimizerState
    {
        std::vector<MatrixXd> m_weight, v_weight;
        std::vector<VectorXd> m_bias, v_bias;
        long step = 0;
        AdamWConfig config;

        static OptimizerState for_model(const FnnModel &model, AdamWConfig cfg)
        {
            OptimizerState s;
            s.config = cfg;
            for (const auto &l : model.layers)
            {
                s.m_weight.push_back(MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
                s.v_weight.push_back(MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
                s.m_bias.push_back(VectorXd::Zero(l.bias.size()));
                s.v_bias.push_back(VectorXd::Zero(l.bias.size()));
            }
            return s;
        }
    };

    inline void adamw_step(FnnModel &model, const Gradients &grads, OptimizerState &state)
    {
        if (grads.weight.size() != model.layers.size() || state.m_weight.size() != model.layers.size())
            throw std::invalid_argument("adamw_step: layer count mismatch");
        ++state.step;
        for (std::size_t l = 0; l < model.layers.size(); ++l)
        {
            auto &layer = model.layers[l];
            if (grads.weight[l].rows() != layer.weight.rows() || grads.weight[l].cols() != layer.weight.cols() ||
                grads.bias[l].size() != layer.bias.size())
                throw std::invalid_argument("adamw_step: gradient shape mismatch");
            using Eigen::ArrayXd;
            using Eigen::Map;
            const auto nw = layer.weight.size();
            adamw_update(Map<ArrayXd>(layer.weight.data(), nw), Map<const ArrayXd>(grads.weight[l].data(), nw),
                         Map<ArrayXd>(state.m_weight[l].data(), nw), Map<ArrayXd>(state.v_weight[l].data(), nw),
                         state.step, state.config);
            const auto nb = layer.bias.size();
            adamw_update(Map<ArrayXd>(layer.bias.data(), nb), Map<const ArrayXd>(grads.bias[l].data(), nb),
                         Map<ArrayXd>(state.m_bias[l].data(), nb), Map<ArrayXd>(state.v_bias[l].data(), nb),
                         state.step, state.config);
        }
    }

    // Halves the learning rate once validation loss has not improved (relative threshold) for more
    // than `patience` epochs.
    struct ReduceOnPlateau
    {
        double factor = 0.5;
        int patience = 5;
        double min_lr = 1e-6;
        double threshold = 1e-4;

        double best = std::numeric_limits<double>::infinity();
        int bad_epochs = 0;

        double update(double val_loss, double lr)
        {
            if (val_loss < best * (1.0 - threshold))
            {
                best = val_loss;
                bad_epochs = 0;
                return lr;
            }
            if (++bad_epochs > patience)
            {
                bad_epochs = 0;
                return std::max(min_lr, lr * factor);
            }
            return lr;
        }
    };

    struct TrainConfig
    {
        int batch_size = 64;
        int epochs = 100;
        double smooth_l1_beta = 1.0;
        AdamWConfig optimizer;
        double scheduler_factor = 0.5;
        int scheduler_patience = 5;
        double scheduler_min_lr = 1e-6;
        std::uint64_t seed = 1;

        void validate() const
        {
            if (batch_size < 1)
                throw config_error("TrainConfig: batch size must be >= 1");
            if (epochs < 1)
                throw config_error("TrainConfig: epochs must be >= 1");
        }
    };

    inline void to_json(nlohmann::json &j, const TrainConfig &c)
    {
        j = nlohmann::json{{"batch_size", c.batch_size},
                           {"epochs", c.epochs},
                           {"smooth_l1_beta", c.smooth_l1_beta},
                           {"learning_rate", c.optimizer.learning_rate},
                           {"weight_decay", c.optimizer.weight_decay},
                           {"beta1", c.optimizer.beta1},
                           {"beta2", c.optimizer.beta2},
                           {"epsilon", c.optimizer.epsilon},
                           {"scheduler", "reduce_on_plateau"},
                           {"scheduler_factor", c.scheduler_factor},
                           {"scheduler_patience", c.scheduler_patience},
                           {"scheduler_min_lr", c.scheduler_min_lr},
                           {"seed", c.seed}};
    }

    struct EpochStats
    {
        int epoch = 0;
        double train_loss = 0.0;
        double val_loss = 0.0;
        double learning_rate = 0.0;
    };

    struct TrainResult
    {
        FnnModel best;
        std::vector<EpochStats> history;
        int best_epoch = 0;
        double best_val_loss = std::numeric_limits<double>::infinity();
    };

    inline double evaluate_loss(const FnnModel &model, const MatrixXd &x, const VectorXd &y, double beta,
                                Eigen::Index chunk = 1024)
    {
        double total = 0.0;
        for (Eigen::Index start = 0; start < x.cols(); start += chunk)
        {
            const Eigen::Index len = std::min(chunk, x.cols() - start);
            const MatrixXd out = forward(model, x.middleCols(start, len), Mode::eval);
            total += smooth_l1(out.row(0).transpose(), y.segment(start, len), beta).loss * static_cast<double>(len);
        }
        return total / static_cast<double>(x.cols());
    }

    // Mini-batch training on normalized data. Returns the parameters with the best validation loss.
    inline TrainResult train(FnnModel model, const MatrixXd &x_train, const VectorXd &y_train, const MatrixXd &x_val,
                             const VectorXd &y_val, const TrainConfig &cfg,
                             const std::function<void(const EpochStats &)> &on_epoch = {})
    {
        cfg.validate();
        if (x_train.cols() == 0 || x_val.cols() == 0)
            throw data_error("train: empty training or validation split");
        if (x_train.cols() != y_train.size() || x_val.cols() != y_val.size())
            throw data_error("train: feature/label count mismatch");

        Rng rng = derive_rng(cfg.seed, Stream::training);
        OptimizerState opt = OptimizerState::for_model(model, cfg.optimizer);
        ReduceOnPlateau sched{cfg.scheduler_factor, cfg.scheduler_patience, cfg.scheduler_min_lr};

        std::vector<Eigen::Index> order(static_cast<std::size_t>(x_train.cols()));
        std::iota(order.begin(), order.end(), Eigen::Index{0});

        TrainResult result;
        result.best = model;
        ForwardCache cache;
        MatrixXd xb;
        VectorXd yb;
        for (int epoch = 1; epoch <= cfg.epochs; ++epoch)
        {
            std::shuffle(order.begin(), order.end(), rng);
            double running = 0.0;
            for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size))
            {
                const std::size_t len = std::min(static_cast<std::size_t>(cfg.batch_size), order.size() - start);
                xb.resize(x_train.rows(), static_cast<Eigen::Index>(len));
                yb.resize(static_cast<Eigen::Index>(len));
                for (std::size_t i = 0; i < len; ++i)
                {
                    xb.col(static_cast<Eigen::Index>(i)) = x_train.col(order[start + i]);
                    yb[static_cast<Eigen::Index>(i)] = y_train[order[start + i]];
                }
                const MatrixXd out = forward(model, xb, Mode::train, &rng, &cache);
                const LossResult loss = smooth_l1(out.row(0).transpose(), yb, cfg.smooth_l1_beta);
                if (!std::isfinite(loss.loss))
                    throw numerical_error("train: non-finite loss at epoch " + std::to_string(epoch));
                running += loss.loss * static_cast<double>(len);
                const Gradients g = backward(model, cache, loss.grad.transpose());
                adamw_step(model, g, opt);
            }
            EpochStats st;
            st.epoch = epoch;
            st.train_loss = running / static_cast<double>(order.size());
            st.val_loss = evaluate_loss(model, x_val, y_val, cfg.smooth_l1_beta);
            st.learning_rate = opt.config.learning_rate;
            if (!std::isfinite(st.val_loss))
                throw numerical_error("train: non-finite validation loss at epoch " + std::to_string(epoch));
            result.history.push_back(st);
            if (st.val_loss < result.best_val_loss)
            {
                result.best_val_loss = st.val_loss;
                result.best_epoch = epoch;
                result.best = model;
            }
            opt.config.learning_rate = sched.update(st.val_loss, opt.config.learning_rate);
            if (on_epoch)
                on_epoch(st);
        }
        return result;
    }

    // Normalize, eval-mode forward, map back to seconds, floor at min_prediction.
    inline double predict_tb(const FnnModel &model, const FeatureVector &raw)
    {
        // Same arithmetic as forward() in eval mode, with reused buffers.
        thread_local VectorXd a, z;
        a = model.normalizer.features(raw);
        if (a.size() != model.input_width)
            throw std::invalid_argument("predict_tb: feature width does not match the model");
        const double slope = model.leaky_slope;
        const std::size_t n = model.layers.size();
        for (std::size_t l = 0; l < n; ++l)
        {
            const auto &layer = model.layers[l];
            z.resize(layer.weight.rows());
            z.noalias() = layer.weight * a;
            z += layer.bias;
            if (l + 1 == n)
                a = z.cwiseMax(0.0);
            else
                a = z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
        }
        return std::max(model.normalizer.denormalize_label(a[0]), model.min_prediction);
    }

    inline constexpr int model_format_version = 1;

    inline nlohmann::json model_payload(const FnnModel &model)
    {
        nlohmann::json layers = nlohmann::json::array();
        for (const auto &l : model.layers)
        {
            std::vector<double> w(static_cast<std::size_t>(l.weight.size()));
            // row-major
            for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
                for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
                    w[static_cast<std::size_t>(r * l.weight.cols() + c)] = l.weight(r, c);
            layers.push_back({{"rows", l.weight.rows()},
                              {"cols", l.weight.cols()},
                              {"weight", std::move(w)},
                              {"bias", std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size())}});
        }
        nlohmann::json j;
        j["format"] = "nftb-fnn";
        j["version"] = model_format_version;
        j["architecture"] = {{"input_width", model.input_width},
                             {"widths", model.widths()},
                             {"hidden_activation", "leaky_relu"},
                             {"leaky_slope", model.leaky_slope},
                             {"output_activation", "relu"},
                             {"dropout", model.dropout}};
        j["normalizer"] = model.normalizer;
        j["min_prediction"] = model.min_prediction;
        j["train_config"] = model.train_config;
        j["train_config_hash"] = sha256_hex(model.train_config.dump());
        j["layers"] = std::move(layers);
        return j;
    }

    inline std::string serialize_model(const FnnModel &model)
    {
        nlohmann::json j = model_payload(model);
        j["checksum"] = sha256_hex(j.dump());
        return j.dump() + "\n";
    }

    inline FnnModel deserialize_model(const std::string &text)
    {
        nlohmann::json j;
        try
        {
            j = nlohmann::json::parse(text);
        }
        catch (const nlohmann::json::exception &e)
        {
            throw data_error(std::string("model file: not valid JSON: ") + e.what());
        }
        try
        {
            if (j.at("format") != "nftb-fnn")
                throw data_error("model file: unknown format");
            if (j.at("version").get<int>() != model_format_version)
                throw data_error("model file: unsupported version " + j.at("version").dump());
            const std::string checksum = j.at("checksum").get<std::string>();
            nlohmann::json payload = j;
            payload.erase("checksum");
            if (sha256_hex(payload.dump()) != checksum)
                throw data_error("model file: checksum mismatch");

            FnnModel m;
            const auto &arch = j.at("architecture");
            m.input_width = arch.at("input_width").get<int>();
            m.leaky_slope = arch.at("leaky_slope").get<double>();
            m.dropout = arch.at("dropout").get<double>();
            const auto widths = arch.at("widths").get<std::vector<int>>();
            const auto &layers = j.at("layers");
            if (layers.size() != widths.size())
                throw data_error("model file: declared layer count does not match stored layers");
            int fan_in = m.input_width;
            for (std::size_t i = 0; i < widths.size(); ++i)
            {
                const auto &lj = layers[i];
                const auto rows = lj.at("rows").get<Eigen::Index>();
                const auto cols = lj.at("cols").get<Eigen::Index>();
                if (rows != widths[i] || cols != fan_in)
                    throw data_error("model file: layer " + std::to_string(i) + " shape does not match declared widths");
                const auto w = lj.at("weight").get<std::vector<double>>();
                const auto b = lj.at("bias").get<std::vector<double>>();
                if (static_cast<Eigen::Index>(w.size()) != rows * cols || static_cast<Eigen::Index>(b.size()) != rows)
                    throw data_error("model file: layer " + std::to_string(i) + " parameter count mismatch");
                DenseLayer l;
                l.weight.resize(rows, cols);
                for (Eigen::Index r = 0; r < rows; ++r)
                    for (Eigen::Index c = 0; c < cols; ++c)
                        l.weight(r, c) = w[static_cast<std::size_t>(r * cols + c)];
                l.bias = Eigen::Map<const VectorXd>(b.data(), rows);
                m.layers.push_back(std::move(l));
                fan_in = widths[i];
            }
            m.normalizer = j.at("normalizer").get<Normalizer>();
            m.min_prediction = j.at("min_prediction").get<double>();
            m.train_config = j.at("train_config");
            return m;
        }
        catch (const nlohmann::json::exception &e)
        {
            throw data_error(std::string("model file: ") + e.what());
        }
    }

    inline void save_model(const FnnModel &model, const std::filesystem::path &path)
    {
        write_file(path, serialize_model(model));
    }

    inline FnnModel load_model(const std::filesystem::path &path) { return deserialize_model(read_file(path)); }
}

#endif
