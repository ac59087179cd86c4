#include "baf/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

namespace baf {

namespace {

std::vector<float> gather_params(const FilterNet& net, bool include_kernels) {
    std::vector<float> out;
    if (include_kernels)
        for (const auto& k : net.kernel_layers)
            out.insert(out.end(), k.data.begin(), k.data.end());
    for (const auto& b : net.bias_layers)
        out.insert(out.end(), b.begin(), b.end());
    return out;
}

void scatter_params(FilterNet& net, const std::vector<float>& flat,
                    bool include_kernels) {
    std::size_t pos = 0;
    if (include_kernels)
        for (auto& k : net.kernel_layers) {
            std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), k.data.size(),
                        k.data.begin());
            pos += k.data.size();
        }
    for (auto& b : net.bias_layers) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), b.size(), b.begin());
        pos += b.size();
    }
}

void accumulate_grads(const NetGrads& g, bool include_kernels,
                      std::vector<double>& acc) {
    std::size_t pos = 0;
    if (include_kernels)
        for (const auto& k : g.kernel_grads) {
            for (float v : k.data) acc[pos++] += static_cast<double>(v);
        }
    for (const auto& b : g.bias_grads)
        for (float v : b) acc[pos++] += static_cast<double>(v);
}

// one optimizer step over an averaged mini-batch gradient
double run_batch(FilterNet& net, const PatchPairSet& dataset,
                 const std::vector<std::size_t>& idx, bool train_kernels,
                 AdamState& opt_state, float lr) {
    std::vector<float> params = gather_params(net, train_kernels);
    std::vector<double> acc(params.size(), 0.0);
    double loss_sum = 0.0;
    // fixed pair-index order keeps runs bit-reproducible
    for (std::size_t i : idx) {
        const auto& pair = dataset.pairs[i];
        TrainStep step = forward_backward(net, pair.input, pair.target, train_kernels);
        if (!std::isfinite(step.loss))
            throw Error("training diverged: non-finite loss");
        loss_sum += static_cast<double>(step.loss);
        accumulate_grads(step.grads, train_kernels, acc);
    }
    std::vector<float> grads(acc.size());
    const double inv = 1.0 / static_cast<double>(idx.size());
    for (std::size_t i = 0; i < acc.size(); ++i)
        grads[i] = static_cast<float>(acc[i] * inv);

    adam_step<float>(params, grads, opt_state, lr);
    scatter_params(net, params, train_kernels);
    return loss_sum;
}

}  // namespace

std::vector<std::size_t> sample_batch(const PatchPairSet& dataset,
                                      std::mt19937_64& rng, std::size_t batch_size) {
    if (dataset.pairs.empty()) throw ContractError("sample_batch: empty dataset");

    std::map<std::size_t, std::vector<std::size_t>> by_source;
    for (std::size_t i = 0; i < dataset.pairs.size(); ++i)
        by_source[dataset.pairs[i].source_id].push_back(i);

    std::vector<std::size_t> out;
    out.reserve(batch_size);
    if (by_source.size() >= batch_size) {
        std::vector<std::size_t> sources;
        sources.reserve(by_source.size());
        for (const auto& [id, _] : by_source) sources.push_back(id);
        std::shuffle(sources.begin(), sources.end(), rng);
        for (std::size_t k = 0; k < batch_size; ++k) {
            const auto& members = by_source[sources[k]];
            out.push_back(members[rng() % members.size()]);
        }
    } else {
        for (std::size_t k = 0; k < batch_size; ++k)
            out.push_back(rng() % dataset.pairs.size());
    }
    return out;
}

float lr_schedule(TrainMode mode, float initial_lr, std::size_t epoch) {
    if (mode == TrainMode::pretrain) return initial_lr;
    const std::size_t halvings = std::min<std::size_t>(epoch, 110) / 20;
    return initial_lr * std::exp2f(-static_cast<float>(halvings));
}

EpochReport train_epoch(FilterNet& net, const PatchPairSet& dataset,
                        const TrainConfig& config, AdamState& opt_state,
                        std::size_t epoch, std::mt19937_64& rng) {
    const auto t0 = std::chrono::steady_clock::now();
    const bool train_kernels = config.mode == TrainMode::pretrain;
    const float lr = lr_schedule(config.mode, config.initial_lr, epoch);

    double loss_sum = 0.0;
    std::size_t patches = 0;
    if (config.mode == TrainMode::pretrain) {
        for (std::size_t b = 0; b < config.batches_per_epoch; ++b) {
            const auto idx = sample_batch(dataset, rng, config.batch_size);
            loss_sum += run_batch(net, dataset, idx, train_kernels, opt_state, lr);
            patches += idx.size();
        }
    } else {
        // one full pass over every pair, shuffled per epoch
        if (dataset.pairs.empty()) throw ContractError("train_epoch: empty dataset");
        std::vector<std::size_t> order(dataset.pairs.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
            loss_sum += run_batch(net, dataset, idx, train_kernels, opt_state, lr);
            patches += idx.size();
        }
    }

    const auto t1 = std::chrono::steady_clock::now();
    EpochReport r;
    r.epoch = epoch;
    r.mean_loss = loss_sum / static_cast<double>(patches);
    r.lr_used = lr;
    r.wall_time_s = std::chrono::duration<double>(t1 - t0).count();
    return r;
}

namespace {

std::pair<FilterNet, std::vector<EpochReport>> run_training(
    FilterNet net, const PatchPairSet& dataset, const TrainConfig& config) {
    const bool train_kernels = config.mode == TrainMode::pretrain;
    const auto counts = count_params(net.config);
    const std::size_t n_trainable =
        train_kernels ? counts.kernel_count + counts.bias_count : counts.bias_count;

    AdamState opt_state(n_trainable);
    std::mt19937_64 rng(config.seed);
    std::vector<EpochReport> reports;
    reports.reserve(config.epochs);
    for (std::size_t e = 0; e < config.epochs; ++e)
        reports.push_back(train_epoch(net, dataset, config, opt_state, e, rng));
    return {std::move(net), std::move(reports)};
}

}  // namespace

std::pair<FilterNet, std::vector<EpochReport>> pretrain(FilterNet net,
                                                        const PatchPairSet& dataset,
                                                        const TrainConfig& config) {
    if (config.mode != TrainMode::pretrain)
        throw ContractError("pretrain: config mode must be pretrain");
    return run_training(std::move(net), dataset, config);
}

std::pair<FilterNet, std::vector<EpochReport>> finetune(FilterNet net,
                                                        const PatchPairSet& dataset,
                                                        const TrainConfig& config) {
    if (config.mode != TrainMode::finetune)
        throw ContractError("finetune: config mode must be finetune");
    return run_training(std::move(net), dataset, config);
}

PatchPairSet make_pairs_grid(const Sequence& degraded, const Sequence& original,
                             int qp, std::size_t patch) {
    if (degraded.frames.size() != original.frames.size() ||
        degraded.width != original.width || degraded.height != original.height)
        throw ContractError("make_pairs_grid: sequence dimensions differ");
    PatchPairSet set;
    for (std::size_t f = 0; f < degraded.frames.size(); ++f) {
        auto dp = extract_patches_grid(degraded.frames[f], patch);
        auto op = extract_patches_grid(original.frames[f], patch);
        for (std::size_t i = 0; i < dp.size(); ++i) {
            PatchPair p;
            p.input = make_input_tensor(dp[i], qp);
            p.target = make_target_tensor(op[i]);
            p.source_id = f;
            set.pairs.push_back(std::move(p));
        }
    }
    return set;
}

void write_history_csv(const std::vector<EpochReport>& reports,
                       const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f << "epoch,mean_loss,lr,wall_time_s\n";
    for (const auto& r : reports)
        f << r.epoch << "," << r.mean_loss << "," << r.lr_used << "," << r.wall_time_s
          << "\n";
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace baf
