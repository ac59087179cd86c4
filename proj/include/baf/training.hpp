#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "baf/adam.hpp"
#include "baf/filter_net.hpp"
#include "baf/yuv.hpp"

namespace baf {

struct PatchPair {
    Tensor input;       // 4 x P x P
    Tensor target;      // 3 x P x P
    std::size_t source_id = 0;  // frame/image provenance
};

struct PatchPairSet {
    std::vector<PatchPair> pairs;
};

enum class TrainMode { pretrain, finetune };

struct TrainConfig {
    TrainMode mode = TrainMode::finetune;
    std::size_t epochs = 110;
    std::size_t batch_size = 64;
    std::size_t batches_per_epoch = 512;  // pretrain only
    float initial_lr = 1e-3f;
    std::uint64_t seed = 0;
};

struct EpochReport {
    std::size_t epoch;
    double mean_loss;
    float lr_used;
    double wall_time_s;
};

// Pretrain batches draw pairs with pairwise-distinct source ids where
// possible; falls back to with-replacement sampling otherwise.
std::vector<std::size_t> sample_batch(const PatchPairSet& dataset,
                                      std::mt19937_64& rng, std::size_t batch_size);

// Pretrain: constant. Finetune: halves every 20 epochs, flat from epoch 110.
float lr_schedule(TrainMode mode, float initial_lr, std::size_t epoch);

EpochReport train_epoch(FilterNet& net, const PatchPairSet& dataset,
                        const TrainConfig& config, AdamState& opt_state,
                        std::size_t epoch, std::mt19937_64& rng);

std::pair<FilterNet, std::vector<EpochReport>> pretrain(FilterNet net,
                                                        const PatchPairSet& dataset,
                                                        const TrainConfig& config);
std::pair<FilterNet, std::vector<EpochReport>> finetune(FilterNet net,
                                                        const PatchPairSet& dataset,
                                                        const TrainConfig& config);

// Builds (degraded input, original target) pairs by grid tiling each frame.
PatchPairSet make_pairs_grid(const Sequence& degraded, const Sequence& original,
                             int qp, std::size_t patch = 128);

void write_history_csv(const std::vector<EpochReport>& reports,
                       const std::string& path);

}  // namespace baf
