#include "fedquant/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <initializer_list>
#include <string_view>
#include <utility>

#include "json.hpp"

#include "fedquant/errors.hpp"

namespace fedquant {

namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

std::size_t line_of_byte(const std::string& text, std::size_t byte) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') ++line;
    }
    return line;
}

// Strict walker: every object's keys are checked against the schema and
// every message carries origin plus the dotted field path.
struct Parser {
    std::string origin;

    [[noreturn]] void fail(const std::string& path, const std::string& message) const {
        throw config_error(origin + ": " + path + ": " + message);
    }

    void check_keys(const json& obj, const std::string& path,
                    std::initializer_list<std::string_view> allowed) const {
        for (const auto& item : obj.items()) {
            bool known = false;
            for (std::string_view key : allowed) {
                if (item.key() == key) {
                    known = true;
                    break;
                }
            }
            if (!known) {
                fail(path.empty() ? item.key() : path + "." + item.key(), "unknown key");
            }
        }
    }

    const json* find(const json& obj, const std::string& path, const char* key) const {
        auto it = obj.find(key);
        if (it == obj.end()) return nullptr;
        return &*it;
    }

    const json& require(const json& obj, const std::string& path, const char* key) const {
        const json* v = find(obj, path, key);
        if (v == nullptr) fail(join(path, key), "missing required key");
        return *v;
    }

    static std::string join(const std::string& path, const char* key) {
        return path.empty() ? key : path + "." + key;
    }

    std::uint64_t as_u64(const json& v, const std::string& path) const {
        if (v.is_number_unsigned()) return v.get<std::uint64_t>();
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
            return static_cast<std::uint64_t>(v.get<std::int64_t>());
        }
        fail(path, "must be a non-negative integer");
    }

    std::uint32_t as_u32(const json& v, const std::string& path) const {
        std::uint64_t u = as_u64(v, path);
        if (u > 0xFFFFFFFFull) fail(path, "exceeds the 32-bit range");
        return static_cast<std::uint32_t>(u);
    }

    double as_double(const json& v, const std::string& path) const {
        if (!v.is_number()) fail(path, "must be a number");
        return v.get<double>();
    }

    bool as_bool(const json& v, const std::string& path) const {
        if (!v.is_boolean()) fail(path, "must be true or false");
        return v.get<bool>();
    }

    std::string as_string(const json& v, const std::string& path) const {
        if (!v.is_string()) fail(path, "must be a string");
        return v.get<std::string>();
    }

    const json& as_object(const json& v, const std::string& path) const {
        if (!v.is_object()) fail(path, "must be an object");
        return v;
    }

    const json& as_array(const json& v, const std::string& path) const {
        if (!v.is_array()) fail(path, "must be an array");
        return v;
    }

    std::uint32_t get_u32(const json& obj, const std::string& path, const char* key,
                          std::uint32_t fallback) const {
        const json* v = find(obj, path, key);
        return v ? as_u32(*v, join(path, key)) : fallback;
    }

    std::uint64_t get_u64(const json& obj, const std::string& path, const char* key,
                          std::uint64_t fallback) const {
        const json* v = find(obj, path, key);
        return v ? as_u64(*v, join(path, key)) : fallback;
    }

    double get_double(const json& obj, const std::string& path, const char* key,
                      double fallback) const {
        const json* v = find(obj, path, key);
        return v ? as_double(*v, join(path, key)) : fallback;
    }

    bool get_bool(const json& obj, const std::string& path, const char* key,
                  bool fallback) const {
        const json* v = find(obj, path, key);
        return v ? as_bool(*v, join(path, key)) : fallback;
    }

    std::string get_string(const json& obj, const std::string& path, const char* key,
                           std::string fallback) const {
        const json* v = find(obj, path, key);
        return v ? as_string(*v, join(path, key)) : std::move(fallback);
    }

    std::vector<std::uint32_t> as_u32_array(const json& v, const std::string& path) const {
        const json& arr = as_array(v, path);
        std::vector<std::uint32_t> out;
        out.reserve(arr.size());
        for (std::size_t i = 0; i < arr.size(); ++i) {
            out.push_back(as_u32(arr[i], path + "[" + std::to_string(i) + "]"));
        }
        return out;
    }
};

Quantiser parse_quantiser(const Parser& p, const json& v, const std::string& path) {
    const std::string s = p.as_string(v, path);
    if (s == "none") return Quantiser::none;
    if (s == "bu") return Quantiser::bu;
    if (s == "bq") return Quantiser::bq;
    if (s == "qsgd") return Quantiser::qsgd;
    p.fail(path, "must be one of none, bu, bq, qsgd");
}

const char* quantiser_name(Quantiser q) {
    switch (q) {
        case Quantiser::none: return "none";
        case Quantiser::bu: return "bu";
        case Quantiser::bq: return "bq";
        case Quantiser::qsgd: return "qsgd";
    }
    return "none";
}

void parse_model(const Parser& p, const json& obj, ExperimentSpec& spec) {
    p.check_keys(obj, "model", {"widths"});
    const json* widths = p.find(obj, "model", "widths");
    if (widths != nullptr) {
        spec.model_widths = p.as_u32_array(*widths, "model.widths");
    }
    if (spec.model_widths.size() < 2) {
        p.fail("model.widths", "need at least an input and an output width");
    }
    for (std::size_t i = 0; i < spec.model_widths.size(); ++i) {
        if (spec.model_widths[i] == 0) {
            p.fail("model.widths[" + std::to_string(i) + "]", "widths must be positive");
        }
    }
}

void parse_data(const Parser& p, const json& obj, ExperimentSpec& spec) {
    const std::string kind = p.get_string(obj, "data", "kind", "synthetic");
    if (kind == "synthetic") {
        spec.data_kind = DataKind::synthetic;
        p.check_keys(obj, "data",
                     {"kind", "classes", "per_class", "test_per_class", "feature_dim", "spread"});
        SyntheticSpec& s = spec.synthetic;
        s.classes = p.get_u32(obj, "data", "classes", s.classes);
        s.per_class = p.get_u32(obj, "data", "per_class", s.per_class);
        s.test_per_class = p.get_u32(obj, "data", "test_per_class", s.test_per_class);
        s.feature_dim = p.get_u32(obj, "data", "feature_dim", s.feature_dim);
        s.spread = static_cast<float>(
            p.get_double(obj, "data", "spread", static_cast<double>(s.spread)));
        if (s.classes < 2) p.fail("data.classes", "need at least 2 classes");
        if (s.per_class == 0) p.fail("data.per_class", "must be at least 1");
        if (s.test_per_class == 0) p.fail("data.test_per_class", "must be at least 1");
        if (s.feature_dim < s.classes) {
            p.fail("data.feature_dim", "must be at least data.classes (one axis per class mean)");
        }
        if (!(s.spread >= 0.0f) || !std::isfinite(s.spread)) {
            p.fail("data.spread", "must be a finite value >= 0");
        }
    } else if (kind == "idx") {
        spec.data_kind = DataKind::idx;
        p.check_keys(obj, "data",
                     {"kind", "train_images", "train_labels", "test_images", "test_labels"});
        IdxSpec& s = spec.idx;
        s.train_images = p.as_string(p.require(obj, "data", "train_images"), "data.train_images");
        s.train_labels = p.as_string(p.require(obj, "data", "train_labels"), "data.train_labels");
        s.test_images = p.as_string(p.require(obj, "data", "test_images"), "data.test_images");
        s.test_labels = p.as_string(p.require(obj, "data", "test_labels"), "data.test_labels");
    } else {
        p.fail("data.kind", "must be synthetic or idx");
    }
}

void parse_partition(const Parser& p, const json& obj, ExperimentSpec& spec) {
    p.check_keys(obj, "partition", {"kind", "alpha"});
    const std::string kind = p.get_string(obj, "partition", "kind", "iid");
    if (kind == "iid") {
        spec.federation.partition = PartitionKind::iid;
    } else if (kind == "dirichlet") {
        spec.federation.partition = PartitionKind::dirichlet;
    } else {
        p.fail("partition.kind", "must be iid or dirichlet");
    }
    spec.federation.dirichlet_alpha =
        p.get_double(obj, "partition", "alpha", spec.federation.dirichlet_alpha);
    if (!(spec.federation.dirichlet_alpha > 0.0) ||
        !std::isfinite(spec.federation.dirichlet_alpha)) {
        p.fail("partition.alpha", "must be a finite value > 0");
    }
}

void parse_federation(const Parser& p, const json& obj, ExperimentSpec& spec) {
    p.check_keys(obj, "federation",
                 {"total_clients", "sampled_per_round", "rounds", "quantiser", "levels",
                  "refresh_period", "calibration_margin", "pretrain_fraction", "pretrain_epochs",
                  "local_epochs", "learning_rate", "batch_size", "weighted_aggregation",
                  "parallel_clients", "transmit_codebook_digest"});
    FederationConfig& f = spec.federation;
    f.total_clients = p.get_u32(obj, "federation", "total_clients", f.total_clients);
    f.sampled_per_round = p.get_u32(obj, "federation", "sampled_per_round", f.sampled_per_round);
    f.rounds = p.get_u32(obj, "federation", "rounds", f.rounds);
    if (const json* q = p.find(obj, "federation", "quantiser")) {
        f.quantiser = parse_quantiser(p, *q, "federation.quantiser");
    }
    f.levels = p.get_u32(obj, "federation", "levels", f.levels);
    f.refresh_period = p.get_u32(obj, "federation", "refresh_period", f.refresh_period);
    f.calibration_margin =
        p.get_double(obj, "federation", "calibration_margin", f.calibration_margin);
    f.pretrain_fraction =
        p.get_double(obj, "federation", "pretrain_fraction", f.pretrain_fraction);
    f.pretrain_epochs = p.get_u32(obj, "federation", "pretrain_epochs", f.pretrain_epochs);
    f.local_epochs = p.get_u32(obj, "federation", "local_epochs", f.local_epochs);
    f.learning_rate = p.get_double(obj, "federation", "learning_rate", f.learning_rate);
    f.batch_size = p.get_u32(obj, "federation", "batch_size", f.batch_size);
    f.weighted_aggregation =
        p.get_bool(obj, "federation", "weighted_aggregation", f.weighted_aggregation);
    f.parallel_clients = p.get_bool(obj, "federation", "parallel_clients", f.parallel_clients);
    f.transmit_codebook_digest =
        p.get_bool(obj, "federation", "transmit_codebook_digest", f.transmit_codebook_digest);

    if (f.total_clients == 0) p.fail("federation.total_clients", "must be at least 1");
    if (f.sampled_per_round == 0 || f.sampled_per_round > f.total_clients) {
        p.fail("federation.sampled_per_round",
               "must be between 1 and federation.total_clients");
    }
    if (f.levels == 0) p.fail("federation.levels", "must be at least 1");
    if (f.refresh_period == 0) p.fail("federation.refresh_period", "must be at least 1");
    if (!(f.calibration_margin > 0.0) || !std::isfinite(f.calibration_margin)) {
        p.fail("federation.calibration_margin", "must be a finite value > 0");
    }
    if (f.pretrain_fraction < 0.0 || f.pretrain_fraction >= 1.0 ||
        !std::isfinite(f.pretrain_fraction)) {
        p.fail("federation.pretrain_fraction", "must be in [0, 1)");
    }
    if (f.pretrain_fraction > 0.0 && f.pretrain_epochs == 0) {
        p.fail("federation.pretrain_epochs", "must be at least 1 when pre-training is on");
    }
    if (f.local_epochs == 0) p.fail("federation.local_epochs", "must be at least 1");
    if (f.learning_rate < 0.0 || !std::isfinite(f.learning_rate)) {
        p.fail("federation.learning_rate", "must be a finite value >= 0");
    }
    if (f.batch_size == 0) p.fail("federation.batch_size", "must be at least 1");
}

void parse_cost(const Parser& p, const json& obj, ExperimentSpec& spec) {
    p.check_keys(obj, "cost", {"bucket_levels", "qsgd_levels", "refresh_period", "boundary_bits"});
    CostGrid& c = spec.cost;
    if (const json* v = p.find(obj, "cost", "bucket_levels")) {
        c.bucket_levels = p.as_u32_array(*v, "cost.bucket_levels");
    }
    if (const json* v = p.find(obj, "cost", "qsgd_levels")) {
        c.qsgd_levels = p.as_u32_array(*v, "cost.qsgd_levels");
    }
    c.refresh_period = p.get_u32(obj, "cost", "refresh_period", c.refresh_period);
    c.boundary_bits = p.get_u32(obj, "cost", "boundary_bits", c.boundary_bits);
    for (std::size_t i = 0; i < c.bucket_levels.size(); ++i) {
        if (c.bucket_levels[i] == 0) {
            p.fail("cost.bucket_levels[" + std::to_string(i) + "]", "must be at least 1");
        }
    }
    for (std::size_t i = 0; i < c.qsgd_levels.size(); ++i) {
        if (c.qsgd_levels[i] == 0) {
            p.fail("cost.qsgd_levels[" + std::to_string(i) + "]", "must be at least 1");
        }
    }
    if (c.refresh_period == 0) p.fail("cost.refresh_period", "must be at least 1");
    if (c.boundary_bits == 0) p.fail("cost.boundary_bits", "must be at least 1");
}

void parse_sweep(const Parser& p, const json& obj, ExperimentSpec& spec) {
    p.check_keys(obj, "sweep", {"axis", "values", "seeds"});
    SweepSpec& s = spec.sweep;
    s.axis = p.get_string(obj, "sweep", "axis", s.axis);
    if (s.axis != "" && s.axis != "alpha" && s.axis != "levels" && s.axis != "seeds") {
        p.fail("sweep.axis", "must be one of alpha, levels, seeds");
    }
    if (const json* v = p.find(obj, "sweep", "values")) {
        const json& arr = p.as_array(*v, "sweep.values");
        s.values.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            s.values.push_back(p.as_double(arr[i], "sweep.values[" + std::to_string(i) + "]"));
        }
    }
    if (const json* v = p.find(obj, "sweep", "seeds")) {
        const json& arr = p.as_array(*v, "sweep.seeds");
        s.seeds.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            s.seeds.push_back(p.as_u64(arr[i], "sweep.seeds[" + std::to_string(i) + "]"));
        }
    }
    if (!s.axis.empty() && s.values.empty()) {
        p.fail("sweep.values", "must not be empty");
    }
    if (!s.axis.empty() && s.seeds.empty()) {
        p.fail("sweep.seeds", "must not be empty");
    }
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        const std::string path = "sweep.values[" + std::to_string(i) + "]";
        if (!std::isfinite(s.values[i])) p.fail(path, "must be finite");
        if (s.axis == "alpha" && !(s.values[i] > 0.0)) p.fail(path, "must be > 0");
        if ((s.axis == "levels" || s.axis == "seeds") &&
            (s.values[i] < 1.0 || s.values[i] != std::floor(s.values[i]))) {
            p.fail(path, "must be a positive integer");
        }
    }
}

const char* kSyntheticSmoke = R"({
  "model": {"widths": [16, 24, 4]},
  "data": {
    "kind": "synthetic",
    "classes": 4,
    "per_class": 150,
    "test_per_class": 40,
    "feature_dim": 16,
    "spread": 0.35
  },
  "partition": {"kind": "iid"},
  "federation": {
    "total_clients": 10,
    "sampled_per_round": 5,
    "rounds": 10,
    "quantiser": "bu",
    "levels": 64,
    "refresh_period": 10,
    "calibration_margin": 1.5,
    "pretrain_fraction": 0.2,
    "pretrain_epochs": 3,
    "local_epochs": 2,
    "learning_rate": 0.05,
    "batch_size": 16
  },
  "seed": 1
}
)";

const char* kMnistReference = R"({
  "model": {"widths": [784, 64, 48, 18, 12, 10]},
  "data": {
    "kind": "idx",
    "train_images": "data/train-images-idx3-ubyte",
    "train_labels": "data/train-labels-idx1-ubyte",
    "test_images": "data/t10k-images-idx3-ubyte",
    "test_labels": "data/t10k-labels-idx1-ubyte"
  },
  "partition": {"kind": "iid"},
  "federation": {
    "total_clients": 100,
    "sampled_per_round": 10,
    "rounds": 50,
    "quantiser": "bu",
    "levels": 64,
    "refresh_period": 10,
    "calibration_margin": 1.5,
    "pretrain_fraction": 0.1,
    "pretrain_epochs": 2,
    "local_epochs": 2,
    "learning_rate": 0.05,
    "batch_size": 32
  },
  "cost": {
    "bucket_levels": [64, 128],
    "qsgd_levels": [64, 128],
    "refresh_period": 10,
    "boundary_bits": 16
  },
  "seed": 1
}
)";

const char* kDirichletSweep = R"({
  "model": {"widths": [16, 24, 4]},
  "data": {
    "kind": "synthetic",
    "classes": 4,
    "per_class": 150,
    "test_per_class": 40,
    "feature_dim": 16,
    "spread": 0.35
  },
  "partition": {"kind": "dirichlet", "alpha": 1.0},
  "federation": {
    "total_clients": 20,
    "sampled_per_round": 5,
    "rounds": 15,
    "quantiser": "bu",
    "levels": 64,
    "refresh_period": 10,
    "calibration_margin": 1.5,
    "pretrain_fraction": 0.2,
    "pretrain_epochs": 3,
    "local_epochs": 2,
    "learning_rate": 0.05,
    "batch_size": 16
  },
  "sweep": {
    "axis": "alpha",
    "values": [1000000.0, 1.0, 0.5],
    "seeds": [1, 2, 3, 4, 5]
  },
  "seed": 1
}
)";

} // namespace

ExperimentSpec parse_config_text(const std::string& text, const std::string& origin) {
    Parser p{origin};
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw config_error(origin + ": line " + std::to_string(line_of_byte(text, e.byte)) +
                           ": malformed JSON (" + e.what() + ")");
    }
    if (!root.is_object()) {
        throw config_error(origin + ": top level must be a JSON object");
    }
    p.check_keys(root, "",
                 {"model", "data", "partition", "federation", "cost", "sweep", "seed", "out_dir"});

    ExperimentSpec spec;
    if (const json* v = p.find(root, "", "model")) parse_model(p, p.as_object(*v, "model"), spec);
    if (const json* v = p.find(root, "", "data")) parse_data(p, p.as_object(*v, "data"), spec);
    if (const json* v = p.find(root, "", "partition")) {
        parse_partition(p, p.as_object(*v, "partition"), spec);
    }
    if (const json* v = p.find(root, "", "federation")) {
        parse_federation(p, p.as_object(*v, "federation"), spec);
    }
    if (const json* v = p.find(root, "", "cost")) parse_cost(p, p.as_object(*v, "cost"), spec);
    if (const json* v = p.find(root, "", "sweep")) parse_sweep(p, p.as_object(*v, "sweep"), spec);
    spec.federation.seed = p.get_u64(root, "", "seed", spec.federation.seed);
    spec.out_dir = p.get_string(root, "", "out_dir", spec.out_dir);

    if (spec.data_kind == DataKind::synthetic) {
        if (spec.model_widths.front() != spec.synthetic.feature_dim) {
            p.fail("model.widths", "first width " + std::to_string(spec.model_widths.front()) +
                                       " does not match data.feature_dim " +
                                       std::to_string(spec.synthetic.feature_dim));
        }
        if (spec.model_widths.back() != spec.synthetic.classes) {
            p.fail("model.widths", "last width " + std::to_string(spec.model_widths.back()) +
                                       " does not match data.classes " +
                                       std::to_string(spec.synthetic.classes));
        }
    }
    if (spec.data_kind == DataKind::idx) {
        if (spec.idx.train_images.empty() || spec.idx.train_labels.empty() ||
            spec.idx.test_images.empty() || spec.idx.test_labels.empty()) {
            p.fail("data", "idx paths must not be empty");
        }
    }
    return spec;
}

ExperimentSpec load_config_file(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (f == nullptr) {
        throw config_error(path + ": cannot open config file");
    }
    std::string text;
    char buffer[4096];
    std::size_t got = 0;
    while ((got = std::fread(buffer, 1, sizeof(buffer), f)) > 0) {
        text.append(buffer, got);
    }
    std::fclose(f);
    return parse_config_text(text, path);
}

std::vector<std::string> preset_names() {
    return {"synthetic-smoke", "mnist-reference", "dirichlet-sweep"};
}

std::string preset_text(const std::string& name) {
    if (name == "synthetic-smoke") return kSyntheticSmoke;
    if (name == "mnist-reference") return kMnistReference;
    if (name == "dirichlet-sweep") return kDirichletSweep;
    std::string known;
    for (const std::string& n : preset_names()) {
        if (!known.empty()) known += ", ";
        known += n;
    }
    throw config_error("preset '" + name + "' not found (available: " + known + ")");
}

ExperimentSpec load_preset(const std::string& name) {
    return parse_config_text(preset_text(name), "preset:" + name);
}

std::string config_to_json(const ExperimentSpec& spec) {
    ordered root;
    root["model"] = {{"widths", spec.model_widths}};
    ordered data;
    if (spec.data_kind == DataKind::synthetic) {
        data["kind"] = "synthetic";
        data["classes"] = spec.synthetic.classes;
        data["per_class"] = spec.synthetic.per_class;
        data["test_per_class"] = spec.synthetic.test_per_class;
        data["feature_dim"] = spec.synthetic.feature_dim;
        data["spread"] = spec.synthetic.spread;
    } else {
        data["kind"] = "idx";
        data["train_images"] = spec.idx.train_images;
        data["train_labels"] = spec.idx.train_labels;
        data["test_images"] = spec.idx.test_images;
        data["test_labels"] = spec.idx.test_labels;
    }
    root["data"] = data;
    ordered part;
    part["kind"] = spec.federation.partition == PartitionKind::iid ? "iid" : "dirichlet";
    part["alpha"] = spec.federation.dirichlet_alpha;
    root["partition"] = part;
    ordered fed;
    fed["total_clients"] = spec.federation.total_clients;
    fed["sampled_per_round"] = spec.federation.sampled_per_round;
    fed["rounds"] = spec.federation.rounds;
    fed["quantiser"] = quantiser_name(spec.federation.quantiser);
    fed["levels"] = spec.federation.levels;
    fed["refresh_period"] = spec.federation.refresh_period;
    fed["calibration_margin"] = spec.federation.calibration_margin;
    fed["pretrain_fraction"] = spec.federation.pretrain_fraction;
    fed["pretrain_epochs"] = spec.federation.pretrain_epochs;
    fed["local_epochs"] = spec.federation.local_epochs;
    fed["learning_rate"] = spec.federation.learning_rate;
    fed["batch_size"] = spec.federation.batch_size;
    fed["weighted_aggregation"] = spec.federation.weighted_aggregation;
    fed["parallel_clients"] = spec.federation.parallel_clients;
    fed["transmit_codebook_digest"] = spec.federation.transmit_codebook_digest;
    root["federation"] = fed;
    ordered cost;
    cost["bucket_levels"] = spec.cost.bucket_levels;
    cost["qsgd_levels"] = spec.cost.qsgd_levels;
    cost["refresh_period"] = spec.cost.refresh_period;
    cost["boundary_bits"] = spec.cost.boundary_bits;
    root["cost"] = cost;
    if (!spec.sweep.axis.empty()) {
        ordered sweep;
        sweep["axis"] = spec.sweep.axis;
        sweep["values"] = spec.sweep.values;
        sweep["seeds"] = spec.sweep.seeds;
        root["sweep"] = sweep;
    }
    root["seed"] = spec.federation.seed;
    if (!spec.out_dir.empty()) {
        root["out_dir"] = spec.out_dir;
    }
    return root.dump(2) + "\n";
}

std::pair<Dataset, Dataset> load_datasets(const ExperimentSpec& spec) {
    if (spec.data_kind == DataKind::synthetic) {
        const RandomStream base(spec.federation.seed);
        const SyntheticSpec& s = spec.synthetic;
        Dataset train = make_synthetic(s.classes, s.per_class, s.feature_dim, s.spread,
                                       base.child("data"));
        Dataset test = make_synthetic(s.classes, s.test_per_class, s.feature_dim, s.spread,
                                      base.child("data-test"));
        return {std::move(train), std::move(test)};
    }
    Dataset train = load_idx(spec.idx.train_images, spec.idx.train_labels);
    Dataset test = load_idx(spec.idx.test_images, spec.idx.test_labels);
    return {std::move(train), std::move(test)};
}

} // namespace fedquant
