#include "fedquant/federation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

#include "fedquant/errors.hpp"
#include "fedquant/wire.hpp"

namespace fedquant {

namespace {

bool is_bucket(Quantiser q) { return q == Quantiser::bu || q == Quantiser::bq; }

// Fallback range when a layer's reference values have no usable spread.
constexpr float kDegenerateLo = -1e-6f;
constexpr float kDegenerateHi = 1e-6f;

Codebook layer_codebook(Quantiser quantiser, const std::vector<float>& values,
                        std::uint32_t levels, double margin) {
    if (quantiser == Quantiser::bq) {
        try {
            return bq_codebook(values, levels);
        } catch (const degenerate_range_error&) {
            return bu_codebook(kDegenerateLo, kDegenerateHi, levels);
        }
    }
    double lo = values[0];
    double hi = values[0];
    for (float v : values) {
        lo = std::min(lo, static_cast<double>(v));
        hi = std::max(hi, static_cast<double>(v));
    }
    const double centre = (lo + hi) / 2.0;
    const double half = (hi - lo) / 2.0 * margin;
    const float flo = static_cast<float>(centre - half);
    const float fhi = static_cast<float>(centre + half);
    if (!(flo < fhi)) {
        return bu_codebook(kDegenerateLo, kDegenerateHi, levels);
    }
    return bu_codebook(flo, fhi, levels);
}

struct ClientShipment {
    Update decoded;
    WireBits bits;
    std::size_t data_size = 0;
};

// One client's round: local training, then the update goes through the real
// encode -> serialize -> parse -> decode path the server would see.
ClientShipment run_client(const ModelSpec& spec, const Parameters& global, const Dataset& shard,
                          const FederationConfig& cfg, const std::vector<Codebook>& codebooks,
                          bool refresh, RandomStream train_rng, RandomStream qsgd_rng) {
    LocalTrainConfig local_cfg;
    local_cfg.epochs = cfg.local_epochs;
    local_cfg.learning_rate = cfg.learning_rate;
    local_cfg.batch_size = cfg.batch_size;
    local_cfg.rng = train_rng;

    const Parameters local = local_train(spec, global, shard, local_cfg);
    const Update delta = compute_update(local, global);
    const std::vector<std::size_t> dims = spec.layer_dims();

    ClientShipment out;
    out.data_size = shard.size();
    switch (cfg.quantiser) {
        case Quantiser::none: {
            const auto bytes = serialize_raw_update(delta);
            ParsedRawUpdate parsed = parse_raw_update(bytes, dims);
            out.decoded = std::move(parsed.update);
            out.bits = parsed.bits;
            break;
        }
        case Quantiser::bu:
        case Quantiser::bq: {
            std::vector<QuantisedLayerUpdate> layers;
            layers.reserve(delta.per_layer.size());
            for (std::size_t l = 0; l < delta.per_layer.size(); ++l) {
                layers.push_back(encode(delta.per_layer[l], codebooks[l]));
            }
            const auto bytes =
                serialize_bucket_update(layers, codebooks, refresh, cfg.transmit_codebook_digest);
            ParsedBucketUpdate parsed = parse_bucket_update(bytes, codebooks, dims);
            out.decoded.per_layer.reserve(parsed.layers.size());
            for (std::size_t l = 0; l < parsed.layers.size(); ++l) {
                out.decoded.per_layer.push_back(decode(parsed.layers[l], codebooks[l]));
            }
            out.bits = parsed.bits;
            break;
        }
        case Quantiser::qsgd: {
            std::vector<QsgdLayerUpdate> layers;
            layers.reserve(delta.per_layer.size());
            for (std::size_t l = 0; l < delta.per_layer.size(); ++l) {
                layers.push_back(
                    qsgd_encode(delta.per_layer[l], cfg.levels, qsgd_rng.child("layer", l)));
            }
            const auto bytes = serialize_qsgd_update(layers, cfg.levels);
            ParsedQsgdUpdate parsed = parse_qsgd_update(bytes, cfg.levels, dims);
            out.decoded.per_layer.reserve(parsed.layers.size());
            for (const QsgdLayerUpdate& layer : parsed.layers) {
                out.decoded.per_layer.push_back(qsgd_decode(layer, cfg.levels));
            }
            out.bits = parsed.bits;
            break;
        }
    }
    return out;
}

std::vector<float> concat_layers(const Update& update) {
    std::size_t total = 0;
    for (const auto& layer : update.per_layer) total += layer.size();
    std::vector<float> flat;
    flat.reserve(total);
    for (const auto& layer : update.per_layer) {
        flat.insert(flat.end(), layer.begin(), layer.end());
    }
    return flat;
}

Rational amortised_codebook_bits(const std::vector<Codebook>& codebooks,
                                 std::uint32_t refresh_period) {
    Rational total(0);
    for (const Codebook& book : codebooks) {
        total = total + Rational(16 * static_cast<std::int64_t>(book.levels()),
                                 static_cast<std::int64_t>(refresh_period));
    }
    return total;
}

} // namespace

void FederationConfig::validate() const {
    if (total_clients == 0) {
        throw input_error("FederationConfig::validate: total_clients must be at least 1");
    }
    if (sampled_per_round == 0 || sampled_per_round > total_clients) {
        throw input_error("FederationConfig::validate: sampled_per_round must be in [1, " +
                          std::to_string(total_clients) + "]");
    }
    if (levels == 0) {
        throw input_error("FederationConfig::validate: levels must be at least 1");
    }
    if (refresh_period == 0) {
        throw input_error("FederationConfig::validate: refresh_period must be at least 1");
    }
    if (!(calibration_margin > 0.0) || !std::isfinite(calibration_margin)) {
        throw input_error("FederationConfig::validate: calibration_margin must be positive");
    }
    if (partition == PartitionKind::dirichlet &&
        (!(dirichlet_alpha > 0.0) || !std::isfinite(dirichlet_alpha))) {
        throw input_error("FederationConfig::validate: dirichlet_alpha must be positive");
    }
    if (pretrain_fraction < 0.0 || pretrain_fraction >= 1.0) {
        throw input_error("FederationConfig::validate: pretrain_fraction must be in [0, 1)");
    }
    if (pretrain_fraction > 0.0 && pretrain_epochs == 0) {
        throw input_error("FederationConfig::validate: pretrain_epochs must be at least 1");
    }
    if (local_epochs == 0) {
        throw input_error("FederationConfig::validate: local_epochs must be at least 1");
    }
    if (learning_rate < 0.0 || !std::isfinite(learning_rate)) {
        throw input_error("FederationConfig::validate: learning_rate must be finite and >= 0");
    }
    if (batch_size == 0) {
        throw input_error("FederationConfig::validate: batch_size must be at least 1");
    }
}

std::vector<std::uint32_t> sample_clients(std::uint32_t total, std::uint32_t count,
                                          std::uint32_t round, const RandomStream& base) {
    if (count > total) {
        throw input_error("sample_clients: cannot sample " + std::to_string(count) + " of " +
                          std::to_string(total) + " clients");
    }
    RandomStream rng = base.child("sample", round);
    std::vector<std::uint32_t> pool(total);
    std::iota(pool.begin(), pool.end(), 0u);
    for (std::uint32_t j = 0; j < count; ++j) {
        const std::uint64_t pick = j + rng.next_below(total - j);
        std::swap(pool[j], pool[static_cast<std::size_t>(pick)]);
    }
    pool.resize(count);
    std::sort(pool.begin(), pool.end());
    return pool;
}

std::vector<Codebook> build_codebooks(Quantiser quantiser, const Update& reference,
                                      std::uint32_t levels, double margin) {
    if (!is_bucket(quantiser)) {
        throw input_error("build_codebooks: only bucket quantisers use codebooks");
    }
    if (levels == 0) {
        throw input_error("build_codebooks: levels must be at least 1");
    }
    if (!(margin > 0.0) || !std::isfinite(margin)) {
        throw input_error("build_codebooks: margin must be positive");
    }
    std::vector<Codebook> books;
    books.reserve(reference.per_layer.size());
    for (std::size_t l = 0; l < reference.per_layer.size(); ++l) {
        if (reference.per_layer[l].empty()) {
            throw input_error("build_codebooks: layer " + std::to_string(l) +
                              " of the reference update is empty");
        }
        books.push_back(layer_codebook(quantiser, reference.per_layer[l], levels, margin));
    }
    return books;
}

Update average_updates(const std::vector<Update>& updates, const std::vector<double>& weights) {
    if (updates.empty()) {
        throw input_error("average_updates: no updates to average");
    }
    if (!weights.empty() && weights.size() != updates.size()) {
        throw input_error("average_updates: " + std::to_string(weights.size()) +
                          " weights for " + std::to_string(updates.size()) + " updates");
    }
    const std::size_t layers = updates[0].per_layer.size();
    for (const Update& u : updates) {
        if (u.per_layer.size() != layers) {
            throw input_error("average_updates: updates disagree on layer count");
        }
        for (std::size_t l = 0; l < layers; ++l) {
            if (u.per_layer[l].size() != updates[0].per_layer[l].size()) {
                throw input_error("average_updates: updates disagree on layer " +
                                  std::to_string(l) + " size");
            }
        }
    }
    std::vector<double> norm(updates.size(), 1.0 / static_cast<double>(updates.size()));
    if (!weights.empty()) {
        double total = 0.0;
        for (double w : weights) {
            if (w < 0.0 || !std::isfinite(w)) {
                throw input_error("average_updates: weights must be finite and non-negative");
            }
            total += w;
        }
        if (!(total > 0.0)) {
            throw input_error("average_updates: weights must not all be zero");
        }
        for (std::size_t i = 0; i < weights.size(); ++i) norm[i] = weights[i] / total;
    }

    Update mean;
    mean.per_layer.resize(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t n = updates[0].per_layer[l].size();
        mean.per_layer[l].resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t u = 0; u < updates.size(); ++u) {
                acc += norm[u] * static_cast<double>(updates[u].per_layer[l][i]);
            }
            mean.per_layer[l][i] = static_cast<float>(acc);
        }
    }
    return mean;
}

ExperimentResult run_experiment(const ModelSpec& spec, const Dataset& train, const Dataset& test,
                                const FederationConfig& cfg) {
    spec.validate();
    cfg.validate();
    train.validate();
    test.validate();
    if (train.feature_dim != spec.input_width() || test.feature_dim != spec.input_width()) {
        throw input_error("run_experiment: dataset feature_dim does not match model input width");
    }
    if (train.class_count != spec.class_count() || test.class_count != spec.class_count()) {
        throw input_error("run_experiment: dataset class_count does not match model head width");
    }

    const RandomStream base(cfg.seed);
    ExperimentResult result;

    Dataset pretrain_data;
    Dataset fed_data;
    if (cfg.pretrain_fraction > 0.0) {
        auto split = split_pretrain(train, cfg.pretrain_fraction, base.child("split"));
        pretrain_data = std::move(split.first);
        fed_data = std::move(split.second);
    } else {
        fed_data = train;
    }

    Parameters params = init_model(spec, base.child("init"));
    if (cfg.pretrain_fraction > 0.0) {
        LocalTrainConfig pre_cfg;
        pre_cfg.epochs = cfg.pretrain_epochs;
        pre_cfg.learning_rate = cfg.learning_rate;
        pre_cfg.batch_size = cfg.batch_size;
        pre_cfg.rng = base.child("pretrain");
        params = local_train(spec, params, pretrain_data, pre_cfg);
    }

    const Partition part =
        cfg.partition == PartitionKind::iid
            ? partition_iid(fed_data, cfg.total_clients, base.child("partition"))
            : partition_dirichlet(fed_data, cfg.total_clients, cfg.dirichlet_alpha,
                                  base.child("partition"));
    std::vector<Dataset> shards;
    shards.reserve(cfg.total_clients);
    for (const auto& assignment : part.assignments) {
        shards.push_back(fed_data.subset(assignment));
        result.client_sizes.push_back(assignment.size());
    }

    result.initial_train = evaluate(spec, params, fed_data);
    result.initial_test = evaluate(spec, params, test);

    const std::int64_t full_bits = 32 * static_cast<std::int64_t>(spec.total_dim());
    std::vector<Codebook> codebooks;
    if (is_bucket(cfg.quantiser) && cfg.rounds > 0) {
        const auto pick =
            static_cast<std::size_t>(base.child("calibrate").next_below(cfg.total_clients));
        LocalTrainConfig cal_cfg;
        cal_cfg.epochs = cfg.local_epochs;
        cal_cfg.learning_rate = cfg.learning_rate;
        cal_cfg.batch_size = cfg.batch_size;
        cal_cfg.rng = base.child("calibrate_train");
        const Parameters cal_local = local_train(spec, params, shards[pick], cal_cfg);
        const Update cal_delta = compute_update(cal_local, params);
        const auto bytes = serialize_raw_update(cal_delta);
        const ParsedRawUpdate parsed = parse_raw_update(bytes, spec.layer_dims());
        codebooks =
            build_codebooks(cfg.quantiser, parsed.update, cfg.levels, cfg.calibration_margin);

        RoundCost cal_cost;
        cal_cost.round = -1;
        cal_cost.clients = 1;
        cal_cost.uplink_calibration_bits = parsed.bits.total();
        cal_cost.downlink_bits = full_bits;
        result.ledger.append(cal_cost);
    }

    Update last_aggregate;
    for (std::uint32_t k = 0; k < cfg.rounds; ++k) {
        const std::vector<std::uint32_t> sampled =
            sample_clients(cfg.total_clients, cfg.sampled_per_round, k, base);
        const bool refresh = is_bucket(cfg.quantiser) && (k % cfg.refresh_period == 0);
        if (refresh && k > 0) {
            codebooks =
                build_codebooks(cfg.quantiser, last_aggregate, cfg.levels, cfg.calibration_margin);
        }

        std::vector<RandomStream> train_rngs;
        std::vector<RandomStream> qsgd_rngs;
        for (std::uint32_t id : sampled) {
            train_rngs.push_back(base.child("train", k, id));
            qsgd_rngs.push_back(base.child("qsgd", k, id));
        }

        std::vector<ClientShipment> shipments(sampled.size());
        if (cfg.parallel_clients) {
            std::vector<std::future<ClientShipment>> futures;
            futures.reserve(sampled.size());
            for (std::size_t s = 0; s < sampled.size(); ++s) {
                futures.push_back(std::async(std::launch::async, run_client, std::cref(spec),
                                             std::cref(params), std::cref(shards[sampled[s]]),
                                             std::cref(cfg), std::cref(codebooks), refresh,
                                             train_rngs[s], qsgd_rngs[s]));
            }
            for (std::size_t s = 0; s < sampled.size(); ++s) {
                shipments[s] = futures[s].get();
            }
        } else {
            for (std::size_t s = 0; s < sampled.size(); ++s) {
                shipments[s] = run_client(spec, params, shards[sampled[s]], cfg, codebooks,
                                          refresh, train_rngs[s], qsgd_rngs[s]);
            }
        }
        for (std::size_t s = 1; s < shipments.size(); ++s) {
            if (!(shipments[s].bits == shipments[0].bits)) {
                throw std::logic_error("run_experiment: clients disagree on wire bits in round " +
                                       std::to_string(k));
            }
        }

        std::vector<Update> updates;
        std::vector<double> weights;
        updates.reserve(shipments.size());
        for (ClientShipment& ship : shipments) {
            updates.push_back(std::move(ship.decoded));
            if (cfg.weighted_aggregation) {
                weights.push_back(static_cast<double>(ship.data_size));
            }
        }
        const Update mean = average_updates(updates, weights);
        params = apply_update(params, mean, 1.0);
        last_aggregate = mean;

        RoundCost cost;
        cost.round = static_cast<std::int32_t>(k);
        cost.clients = cfg.sampled_per_round;
        cost.refresh = refresh;
        cost.uplink_index_bits = shipments[0].bits.index_bits;
        cost.uplink_codebook_bits_actual = shipments[0].bits.codebook_bits;
        cost.uplink_norm_bits = shipments[0].bits.norm_bits;
        if (is_bucket(cfg.quantiser)) {
            cost.uplink_codebook_bits_amortised =
                amortised_codebook_bits(codebooks, cfg.refresh_period);
        }
        cost.downlink_bits = full_bits;
        result.ledger.append(cost);

        RoundRecord record;
        record.round = k;
        record.sampled = sampled;
        record.refresh = refresh;
        const EvalResult on_train = evaluate(spec, params, fed_data);
        const EvalResult on_test = evaluate(spec, params, test);
        record.train_loss = on_train.loss;
        record.train_accuracy = on_train.accuracy;
        record.test_loss = on_test.loss;
        record.test_accuracy = on_test.accuracy;
        record.wire_bits_per_client = shipments[0].bits.total();
        record.cost = cost;
        record.pooled_stats = update_stats(concat_layers(mean));
        record.layer_stats.reserve(mean.per_layer.size());
        for (const auto& layer : mean.per_layer) {
            record.layer_stats.push_back(update_stats(layer));
        }
        result.rounds.push_back(std::move(record));
    }

    result.params = std::move(params);
    result.cumulative_bits_per_client = result.ledger.cumulative_actual_bits();
    result.baseline_bits = static_cast<std::int64_t>(cfg.rounds) * 2 * full_bits;
    result.reduction_vs_baseline = result.ledger.reduction_vs_baseline(spec, cfg.rounds);
    return result;
}

} // namespace fedquant
