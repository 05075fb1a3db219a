#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedquant/rng.hpp"

namespace fedquant {

// Labelled samples, features stored row-major (size() x feature_dim).
struct Dataset {
    std::vector<float> features;
    std::vector<std::int32_t> labels;
    std::uint32_t feature_dim = 0;
    std::uint32_t class_count = 0;

    std::size_t size() const { return labels.size(); }
    const float* row(std::size_t i) const { return features.data() + i * feature_dim; }
    Dataset subset(const std::vector<std::uint32_t>& indices) const;
    void validate() const;
};

// Gaussian blobs: one mean per class on the scaled standard simplex
// (class c centred at the unit vector e_c), isotropic std dev `spread`.
// Requires feature_dim >= classes. spread == 0 puts samples exactly on the
// means. Sample order is class-major.
Dataset make_synthetic(std::uint32_t classes, std::uint32_t per_class, std::uint32_t feature_dim,
                       float spread, RandomStream rng);

// MNIST-style IDX pair. Images: magic 0x00000803, big-endian u32 dims
// (count, rows, cols), unsigned bytes scaled to [0, 1]. Labels: magic
// 0x00000801, one byte per label, verified in [0, 10). Counts must match.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Disjoint client assignments covering [0, dataset size).
struct Partition {
    std::vector<std::vector<std::uint32_t>> assignments;
    double alpha = 0.0; // 0 = IID
};

// Near-equal random shards; sizes differ by at most one.
Partition partition_iid(const Dataset& data, std::uint32_t clients, RandomStream rng);

// Label-skewed split: per class, client proportions drawn from a symmetric
// Dirichlet(alpha). Redraws (up to 100 times) until every client is
// non-empty, then throws partition_infeasible_error.
Partition partition_dirichlet(const Dataset& data, std::uint32_t clients, double alpha,
                              RandomStream rng);

// Random split into (pretrain, federated) with |pretrain| = floor(fraction*n).
// Both parts must be non-empty.
std::pair<Dataset, Dataset> split_pretrain(const Dataset& data, double fraction, RandomStream rng);

// Shannon entropy (nats) of each client's label histogram.
std::vector<double> per_client_label_entropy(const Dataset& data, const Partition& part);

} // namespace fedquant
