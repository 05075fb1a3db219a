#include "fedquant/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "fedquant/errors.hpp"

namespace fedquant {

Dataset Dataset::subset(const std::vector<std::uint32_t>& indices) const {
    Dataset out;
    out.feature_dim = feature_dim;
    out.class_count = class_count;
    out.features.reserve(indices.size() * feature_dim);
    out.labels.reserve(indices.size());
    for (std::uint32_t i : indices) {
        if (i >= size()) {
            throw input_error("Dataset::subset: index out of range");
        }
        const float* r = row(i);
        out.features.insert(out.features.end(), r, r + feature_dim);
        out.labels.push_back(labels[i]);
    }
    return out;
}

void Dataset::validate() const {
    if (feature_dim == 0 || class_count == 0) {
        throw input_error("Dataset::validate: feature_dim and class_count must be positive");
    }
    if (features.size() != labels.size() * feature_dim) {
        throw input_error("Dataset::validate: feature buffer size does not match label count");
    }
    for (std::int32_t l : labels) {
        if (l < 0 || static_cast<std::uint32_t>(l) >= class_count) {
            throw input_error("Dataset::validate: label out of range");
        }
    }
}

Dataset make_synthetic(std::uint32_t classes, std::uint32_t per_class, std::uint32_t feature_dim,
                       float spread, RandomStream rng) {
    if (classes < 2) {
        throw input_error("make_synthetic: need at least two classes");
    }
    if (per_class == 0) {
        throw input_error("make_synthetic: per_class must be positive");
    }
    if (feature_dim < classes) {
        throw input_error("make_synthetic: feature_dim must be >= classes (simplex means)");
    }
    if (spread < 0.0f) {
        throw input_error("make_synthetic: spread must be non-negative");
    }
    Dataset out;
    out.feature_dim = feature_dim;
    out.class_count = classes;
    out.features.reserve(static_cast<std::size_t>(classes) * per_class * feature_dim);
    out.labels.reserve(static_cast<std::size_t>(classes) * per_class);
    for (std::uint32_t c = 0; c < classes; ++c) {
        for (std::uint32_t s = 0; s < per_class; ++s) {
            for (std::uint32_t f = 0; f < feature_dim; ++f) {
                const double mean = (f == c) ? 1.0 : 0.0;
                const double noise = (spread > 0.0f) ? spread * rng.next_normal() : 0.0;
                out.features.push_back(static_cast<float>(mean + noise));
            }
            out.labels.push_back(static_cast<std::int32_t>(c));
        }
    }
    return out;
}

namespace {

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw format_error("load_idx: cannot open " + path);
    }
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return bytes;
}

std::uint32_t read_be32(const std::vector<unsigned char>& b, std::size_t off,
                        const std::string& path) {
    if (off + 4 > b.size()) {
        throw format_error("load_idx: truncated header in " + path);
    }
    return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
           (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

} // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto img = read_file(images_path);
    const auto lab = read_file(labels_path);

    if (read_be32(img, 0, images_path) != 0x00000803u) {
        throw format_error("load_idx: bad image magic in " + images_path);
    }
    const std::uint64_t n = read_be32(img, 4, images_path);
    const std::uint64_t rows = read_be32(img, 8, images_path);
    const std::uint64_t cols = read_be32(img, 12, images_path);
    if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096) {
        throw format_error("load_idx: implausible image dimensions in " + images_path);
    }
    const std::uint64_t pixels = n * rows * cols;
    if (img.size() != 16 + pixels) {
        throw format_error("load_idx: image payload size mismatch in " + images_path);
    }

    if (read_be32(lab, 0, labels_path) != 0x00000801u) {
        throw format_error("load_idx: bad label magic in " + labels_path);
    }
    const std::uint64_t nl = read_be32(lab, 4, labels_path);
    if (lab.size() != 8 + nl) {
        throw format_error("load_idx: label payload size mismatch in " + labels_path);
    }
    if (n != nl) {
        throw format_error("load_idx: image/label counts differ (" + images_path + ", " +
                           labels_path + ")");
    }

    Dataset out;
    out.feature_dim = static_cast<std::uint32_t>(rows * cols);
    out.class_count = 10;
    out.features.resize(pixels);
    out.labels.resize(n);
    for (std::uint64_t i = 0; i < pixels; ++i) {
        out.features[i] = static_cast<float>(img[16 + i]) / 255.0f;
    }
    for (std::uint64_t i = 0; i < n; ++i) {
        const unsigned char l = lab[8 + i];
        if (l >= 10) {
            throw format_error("load_idx: label out of range in " + labels_path);
        }
        out.labels[i] = static_cast<std::int32_t>(l);
    }
    return out;
}

Partition partition_iid(const Dataset& data, std::uint32_t clients, RandomStream rng) {
    if (clients == 0) {
        throw input_error("partition_iid: clients must be positive");
    }
    if (data.size() < clients) {
        throw input_error("partition_iid: fewer samples than clients");
    }
    std::vector<std::uint32_t> perm(data.size());
    std::iota(perm.begin(), perm.end(), 0u);
    rng.shuffle(perm);

    Partition part;
    part.assignments.resize(clients);
    const std::size_t base = data.size() / clients;
    const std::size_t extra = data.size() % clients;
    std::size_t pos = 0;
    for (std::uint32_t c = 0; c < clients; ++c) {
        const std::size_t take = base + (c < extra ? 1 : 0);
        auto& shard = part.assignments[c];
        shard.assign(perm.begin() + pos, perm.begin() + pos + take);
        std::sort(shard.begin(), shard.end());
        pos += take;
    }
    return part;
}

Partition partition_dirichlet(const Dataset& data, std::uint32_t clients, double alpha,
                              RandomStream rng) {
    if (clients == 0) {
        throw input_error("partition_dirichlet: clients must be positive");
    }
    if (!(alpha > 0.0)) {
        throw input_error("partition_dirichlet: alpha must be positive");
    }
    if (data.size() < clients) {
        throw input_error("partition_dirichlet: fewer samples than clients");
    }

    std::vector<std::vector<std::uint32_t>> by_class(data.class_count);
    for (std::uint32_t i = 0; i < data.size(); ++i) {
        by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
    }

    constexpr int kMaxRetries = 100;
    for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
        Partition part;
        part.alpha = alpha;
        part.assignments.resize(clients);
        for (auto& idxs : by_class) {
            if (idxs.empty()) {
                continue;
            }
            std::vector<std::uint32_t> order = idxs;
            rng.shuffle(order);
            const auto p = rng.next_dirichlet(alpha, clients);
            // Cumulative rounding keeps the per-class total exact.
            double cum = 0.0;
            std::size_t prev = 0;
            for (std::uint32_t c = 0; c < clients; ++c) {
                cum += p[c];
                std::size_t cut = (c + 1 == clients)
                                      ? order.size()
                                      : static_cast<std::size_t>(
                                            std::llround(cum * static_cast<double>(order.size())));
                cut = std::min(cut, order.size());
                cut = std::max(cut, prev);
                part.assignments[c].insert(part.assignments[c].end(), order.begin() + prev,
                                           order.begin() + cut);
                prev = cut;
            }
        }
        const bool all_nonempty =
            std::all_of(part.assignments.begin(), part.assignments.end(),
                        [](const auto& a) { return !a.empty(); });
        if (all_nonempty) {
            for (auto& a : part.assignments) {
                std::sort(a.begin(), a.end());
            }
            return part;
        }
    }
    throw partition_infeasible_error(
        "partition_dirichlet: could not make every client non-empty in 100 attempts");
}

std::pair<Dataset, Dataset> split_pretrain(const Dataset& data, double fraction,
                                           RandomStream rng) {
    if (!(fraction > 0.0) || !(fraction < 1.0)) {
        throw input_error("split_pretrain: fraction must be in (0, 1)");
    }
    const std::size_t n_pre = static_cast<std::size_t>(fraction * static_cast<double>(data.size()));
    if (n_pre == 0 || n_pre >= data.size()) {
        throw input_error("split_pretrain: split leaves an empty part");
    }
    std::vector<std::uint32_t> perm(data.size());
    std::iota(perm.begin(), perm.end(), 0u);
    rng.shuffle(perm);

    std::vector<std::uint32_t> pre(perm.begin(), perm.begin() + n_pre);
    std::vector<std::uint32_t> fed(perm.begin() + n_pre, perm.end());
    std::sort(pre.begin(), pre.end());
    std::sort(fed.begin(), fed.end());
    return {data.subset(pre), data.subset(fed)};
}

std::vector<double> per_client_label_entropy(const Dataset& data, const Partition& part) {
    std::vector<double> out;
    out.reserve(part.assignments.size());
    for (const auto& shard : part.assignments) {
        std::vector<std::size_t> hist(data.class_count, 0);
        for (std::uint32_t i : shard) {
            ++hist[static_cast<std::size_t>(data.labels[i])];
        }
        double h = 0.0;
        for (std::size_t c : hist) {
            if (c > 0) {
                const double p = static_cast<double>(c) / static_cast<double>(shard.size());
                h -= p * std::log(p);
            }
        }
        out.push_back(h);
    }
    return out;
}

} // namespace fedquant
