#pragma once

#include <cstdint>
#include <vector>

#include "fedquant/costing.hpp"
#include "fedquant/data.hpp"
#include "fedquant/model.hpp"
#include "fedquant/quant.hpp"
#include "fedquant/rng.hpp"

namespace fedquant {

// Federated averaging with quantised uplink. One experiment:
//
//   1. split off a pre-training shard, train the initial global model on it
//   2. partition the rest across clients (IID or Dirichlet label skew)
//   3. calibration round (bucket quantisers only): one client sends a
//      full-precision update that seeds the per-layer codebooks; it is NOT
//      applied to the model
//   4. per round k: sample clients, broadcast the model, each client runs
//      local epochs of SGD, encodes its delta, ships it through the real
//      wire format; the server decodes, averages, applies the mean
//   5. codebooks refresh from the last aggregated update at k = 0, T, 2T...
//      (round 0 transmits the calibration books); refresh rounds carry the
//      boundary halves on the uplink, which is where the ledger charges them
//
// Every random draw comes from a child stream of the experiment seed, so
// results are independent of evaluation or thread order. The derivation
// tags are part of the reproducibility contract:
//   "init" | "pretrain" | "split" | "partition" | "calibrate" |
//   "calibrate_train" | ("sample", k) | ("train", k, client) |
//   ("qsgd", k, client) then ("layer", l)
// where `client` is the global client id, not the sample slot.

enum class Quantiser : std::uint8_t { none, bu, bq, qsgd };

enum class PartitionKind : std::uint8_t { iid, dirichlet };

struct FederationConfig {
    std::uint32_t total_clients = 10;
    std::uint32_t sampled_per_round = 5;
    std::uint32_t rounds = 10;

    Quantiser quantiser = Quantiser::none;
    std::uint32_t levels = 16;         // buckets, or the norm-scaled resolution
    std::uint32_t refresh_period = 10; // rounds between codebook refreshes
    // Widens the calibrated range about its midpoint (uniform quantiser
    // only; quantile codebooks take their samples as-is).
    double calibration_margin = 1.0;

    PartitionKind partition = PartitionKind::iid;
    double dirichlet_alpha = 1.0;

    double pretrain_fraction = 0.1; // 0 = start from the random init
    std::uint32_t pretrain_epochs = 2;
    std::uint32_t local_epochs = 2;
    double learning_rate = 0.01;
    std::uint32_t batch_size = 32;

    std::uint64_t seed = 0;
    bool weighted_aggregation = false; // weight client means by shard size
    bool parallel_clients = false;     // identical results either way
    bool transmit_codebook_digest = false;

    void validate() const;
};

struct RoundRecord {
    std::uint32_t round = 0;
    std::vector<std::uint32_t> sampled; // global client ids, ascending
    bool refresh = false;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double test_loss = 0.0;
    double test_accuracy = 0.0;
    // Content bits observed on one client's parsed uplink payload (equal
    // across clients within a round by construction).
    std::int64_t wire_bits_per_client = 0;
    RoundCost cost;
    UpdateStats pooled_stats;              // over the aggregated mean update
    std::vector<UpdateStats> layer_stats;  // one entry per layer
};

struct ExperimentResult {
    Parameters params;
    std::vector<RoundRecord> rounds;
    CostLedger ledger; // calibration row first when present
    EvalResult initial_train; // after pre-training, before round 0
    EvalResult initial_test;
    std::vector<std::size_t> client_sizes;
    std::int64_t cumulative_bits_per_client = 0;
    std::int64_t baseline_bits = 0; // rounds x full-precision up+down
    double reduction_vs_baseline = 0.0;
};

// Sampling for round k: a size-`count` subset of [0, total) drawn without
// replacement from base.child("sample", k), returned ascending.
std::vector<std::uint32_t> sample_clients(std::uint32_t total, std::uint32_t count,
                                          std::uint32_t round, const RandomStream& base);

// Per-layer codebooks fitted to a reference update. Uniform: equal-width
// over [min, max] widened by `margin` about the midpoint. Quantile:
// equal-mass boundaries from the layer's values. Layers with no spread
// (or too narrow to split) fall back to a tiny symmetric range.
std::vector<Codebook> build_codebooks(Quantiser quantiser, const Update& reference,
                                      std::uint32_t levels, double margin);

// Weighted mean of structurally identical updates, accumulated in double
// and rounded once per coordinate. Empty `weights` means equal weights.
Update average_updates(const std::vector<Update>& updates, const std::vector<double>& weights);

// Train data is partitioned internally; `test` is only evaluated.
ExperimentResult run_experiment(const ModelSpec& spec, const Dataset& train, const Dataset& test,
                                const FederationConfig& cfg);

} // namespace fedquant
