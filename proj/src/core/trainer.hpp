// Copyright 2026 The xjac Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "core/encoder.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace xjac {

struct Pair {
    std::string text_a;
    std::string text_b;
    double label = 0.0;  // in [0, 1]
};

/// Three tab-separated columns: text_a, text_b, score in [0, 1]. A first line
/// whose score column is not numeric is treated as a header. Errors name
/// the 1-based line number.
std::vector<Pair> load_dataset(const std::string& path);
std::vector<Pair> parse_dataset(const std::string& contents);
std::string format_dataset(const std::vector<Pair>& pairs);

enum class Objective { DotShifted, Cosine };

std::string to_string(Objective o);
Objective parse_objective(const std::string& s);

struct TrainConfig {
    int epochs = 5;
    int batch_size = 16;
    double learning_rate = 1e-3;
    double weight_decay = 0.1;
    double warmup_fraction = 0.1;
    Objective objective = Objective::DotShifted;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

struct TrainResult {
    std::vector<double> epoch_loss;  // mean squared error per epoch
};

/// Per-step hook, called after every optimizer update with the 0-based step.
using StepCallback = std::function<void(int step, const Model& model)>;

/// Minimises the squared error between predicted and gold scores with AdamW
/// (decoupled weight decay on weight matrices and embeddings), linear warmup
/// over the first warmup_fraction of steps, then a constant rate. Single
/// threaded and deterministic for a fixed seed. The dot objective trains on
/// shifted embeddings, cosine on raw ones; the model's `shifted` flag must
/// agree with the objective.
TrainResult train(Model& model, const std::vector<Pair>& data, const TrainConfig& config,
                  const StepCallback& on_step = {});

/// Rank correlation with average ranks for ties. Throws UsageError on a length
/// mismatch or fewer than two points, NumericalError on zero rank variance.
double spearman(std::span<const double> predictions, std::span<const double> labels);

/// Model predictions in the given similarity mode (on the model's own
/// shifted or raw embeddings).
std::vector<double> predict(const Model& model, const std::vector<Pair>& data, SimilarityMode mode);

double evaluate(const Model& model, const std::vector<Pair>& data, SimilarityMode mode);

/// "epoch,mean_loss" CSV.
std::string loss_trace_csv(const TrainResult& result);

}  // namespace xjac
