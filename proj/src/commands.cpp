#include "fedquant/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "fedquant/errors.hpp"

namespace fedquant {

namespace {

using ordered = nlohmann::ordered_json;

void write_text_file(const std::string& path, const std::string& content) {
    FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) {
        throw std::runtime_error("write_text_file: cannot open " + path + " for writing");
    }
    const std::size_t wrote = std::fwrite(content.data(), 1, content.size(), f);
    std::fclose(f);
    if (wrote != content.size()) {
        throw std::runtime_error("write_text_file: short write to " + path);
    }
}

void ensure_dir(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) {
        throw std::runtime_error("ensure_dir: cannot create " + path + ": " + ec.message());
    }
}

std::string now_utc_iso() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// "327,702.4": one decimal, digit-grouped integer part. The cost table's
// fractional cells are exact multiples of 0.1 for power-of-two levels and
// the default 16-bit boundaries; other grids round to the shown decimal.
std::string group_fixed1(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    std::string s = buf;
    const std::size_t dot = s.find('.');
    const std::string frac = s.substr(dot);
    std::string ip = s.substr(0, dot);
    bool negative = false;
    if (!ip.empty() && ip[0] == '-') {
        negative = true;
        ip = ip.substr(1);
    }
    std::string grouped;
    for (std::size_t i = 0; i < ip.size(); ++i) {
        if (i > 0 && (ip.size() - i) % 3 == 0) grouped += ',';
        grouped += ip[i];
    }
    return (negative ? "-" : "") + grouped + frac;
}

std::string pad_left(const std::string& s, std::size_t width) {
    if (s.size() >= width) return s;
    return std::string(width - s.size(), ' ') + s;
}

std::string percent2(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f%%", fraction * 100.0);
    return buf;
}

ordered eval_json(double loss, double accuracy) {
    ordered e;
    e["loss"] = loss;
    e["accuracy"] = accuracy;
    return e;
}

ordered config_echo(const ExperimentSpec& spec) { return ordered::parse(config_to_json(spec)); }

void write_manifest(const ExperimentSpec& spec, const std::string& out_dir,
                    const std::string& command, const std::vector<std::string>& outputs) {
    ordered m;
    m["tool"] = "fedquant";
    m["command"] = command;
    m["generated_at"] = now_utc_iso();
    m["seed"] = spec.federation.seed;
    m["outputs"] = outputs;
    m["config"] = config_echo(spec);
    write_text_file(out_dir + "/manifest.json", m.dump(2) + "\n");
}

std::string quantiser_label(Quantiser q) {
    switch (q) {
        case Quantiser::none: return "none";
        case Quantiser::bu: return "bu";
        case Quantiser::bq: return "bq";
        case Quantiser::qsgd: return "qsgd";
    }
    return "none";
}

constexpr const char* kMetricsHeader =
    "round,refresh,sampled_clients,train_loss,train_accuracy,test_loss,test_accuracy,"
    "update_range,update_variance,update_excess_kurtosis,uplink_index_bits,"
    "uplink_codebook_bits,uplink_codebook_bits_amortised,uplink_norm_bits,downlink_bits,"
    "wire_bits_total,cumulative_bits";

std::string metrics_csv(const ExperimentResult& result) {
    std::string csv = kMetricsHeader;
    csv += '\n';
    const auto& ledger_rows = result.ledger.rounds();
    const std::size_t first_round_row = ledger_rows.size() - result.rounds.size();
    std::int64_t cumulative = 0;
    for (std::size_t i = 0; i < first_round_row; ++i) {
        cumulative += ledger_rows[i].actual_total();
    }
    for (std::size_t k = 0; k < result.rounds.size(); ++k) {
        const RoundRecord& r = result.rounds[k];
        const RoundCost& c = ledger_rows[first_round_row + k];
        cumulative += c.actual_total();
        csv += std::to_string(r.round);
        csv += ',';
        csv += r.refresh ? '1' : '0';
        csv += ',';
        for (std::size_t s = 0; s < r.sampled.size(); ++s) {
            if (s > 0) csv += ';';
            csv += std::to_string(r.sampled[s]);
        }
        csv += ',';
        csv += format_double(r.train_loss);
        csv += ',';
        csv += format_double(r.train_accuracy);
        csv += ',';
        csv += format_double(r.test_loss);
        csv += ',';
        csv += format_double(r.test_accuracy);
        csv += ',';
        csv += format_double(r.pooled_stats.range);
        csv += ',';
        csv += format_double(r.pooled_stats.variance);
        csv += ',';
        csv += format_double(r.pooled_stats.excess_kurtosis);
        csv += ',';
        csv += std::to_string(c.uplink_index_bits);
        csv += ',';
        csv += std::to_string(c.uplink_codebook_bits_actual);
        csv += ',';
        csv += format_double(c.uplink_codebook_bits_amortised.to_double());
        csv += ',';
        csv += std::to_string(c.uplink_norm_bits);
        csv += ',';
        csv += std::to_string(c.downlink_bits);
        csv += ',';
        csv += std::to_string(r.wire_bits_per_client);
        csv += ',';
        csv += std::to_string(cumulative);
        csv += '\n';
    }
    return csv;
}

ordered summary_json(const ExperimentSpec& spec, const ModelSpec& model,
                     const ExperimentResult& result) {
    ordered s;
    ordered m;
    m["widths"] = spec.model_widths;
    m["layers"] = model.layer_count();
    m["parameters"] = model.total_dim();
    s["model"] = m;
    s["quantiser"] = quantiser_label(spec.federation.quantiser);
    s["levels"] = spec.federation.levels;
    s["rounds"] = spec.federation.rounds;
    s["seed"] = spec.federation.seed;
    s["initial_train"] = eval_json(result.initial_train.loss, result.initial_train.accuracy);
    s["initial_test"] = eval_json(result.initial_test.loss, result.initial_test.accuracy);
    const bool has_rounds = !result.rounds.empty();
    const RoundRecord* last = has_rounds ? &result.rounds.back() : nullptr;
    s["final_train"] = has_rounds
                           ? eval_json(last->train_loss, last->train_accuracy)
                           : eval_json(result.initial_train.loss, result.initial_train.accuracy);
    s["final_test"] = has_rounds
                          ? eval_json(last->test_loss, last->test_accuracy)
                          : eval_json(result.initial_test.loss, result.initial_test.accuracy);
    std::int64_t calibration_bits = 0;
    for (const RoundCost& c : result.ledger.rounds()) {
        if (c.round < 0) calibration_bits += c.actual_total();
    }
    s["calibration_bits_per_client"] = calibration_bits;
    s["cumulative_bits_per_client"] = result.cumulative_bits_per_client;
    s["baseline_bits_per_client"] = result.baseline_bits;
    s["reduction_vs_baseline"] = result.reduction_vs_baseline;
    s["client_sizes"] = result.client_sizes;
    return s;
}

} // namespace

std::string format_double(double v) {
    char buf[64];
    const auto end = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end.ptr);
}

std::string group_digits(std::int64_t v) {
    const bool negative = v < 0;
    std::string digits = std::to_string(negative ? -v : v);
    std::string grouped;
    for (std::size_t i = 0; i < digits.size(); ++i) {
        if (i > 0 && (digits.size() - i) % 3 == 0) grouped += ',';
        grouped += digits[i];
    }
    return (negative ? "-" : "") + grouped;
}

int cmd_run(const ExperimentSpec& spec, const std::string& out_dir, std::ostream& log) {
    const ModelSpec model = ModelSpec::mlp(spec.model_widths);
    auto [train, test] = load_datasets(spec);
    log << "running " << spec.federation.rounds << " rounds, quantiser "
        << quantiser_label(spec.federation.quantiser) << ", " << train.size() << " train / "
        << test.size() << " test samples\n";
    const ExperimentResult result = run_experiment(model, train, test, spec.federation);

    ensure_dir(out_dir);
    write_text_file(out_dir + "/metrics.csv", metrics_csv(result));
    write_text_file(out_dir + "/summary.json", summary_json(spec, model, result).dump(2) + "\n");
    write_manifest(spec, out_dir, "run", {"metrics.csv", "summary.json"});

    const EvalResult final_test =
        result.rounds.empty()
            ? result.initial_test
            : EvalResult{result.rounds.back().test_loss, result.rounds.back().test_accuracy};
    log << "final test accuracy " << format_double(final_test.accuracy) << ", "
        << group_digits(result.cumulative_bits_per_client) << " bits per client ("
        << percent2(result.reduction_vs_baseline) << " below baseline)\n";
    log << "wrote " << out_dir << "/metrics.csv, summary.json, manifest.json\n";
    return 0;
}

int cmd_cost(const ExperimentSpec& spec, std::ostream& out) {
    const ModelSpec model = ModelSpec::mlp(spec.model_widths);
    const CostGrid& grid = spec.cost;
    const BaselineCost base = baseline_cost(model);

    out << "model: " << model.layer_count() << " layers, "
        << group_digits(static_cast<std::int64_t>(model.total_dim())) << " parameters\n";
    out << "baseline full-precision: uplink " << group_digits(base.uplink_bits) << ", downlink "
        << group_digits(base.total_bits - base.uplink_bits) << ", total "
        << group_digits(base.total_bits) << ", reduction 0.00%\n";

    out << "\nbucket quantisers (" << grid.boundary_bits
        << "-bit boundaries, shared codebook refreshed every " << grid.refresh_period
        << " rounds, full-precision downlink)\n";
    out << pad_left("levels", 8) << pad_left("index bits", 14) << pad_left("codebook bits", 16)
        << pad_left("uplink total", 16) << pad_left("round total", 14)
        << pad_left("reduction", 12) << '\n';
    for (std::uint32_t levels : grid.bucket_levels) {
        CostConfig cfg;
        cfg.boundary_bits = grid.boundary_bits;
        cfg.uplink = CodebookCostSpec::uniform(levels, grid.refresh_period);
        const CostBreakdown up = uplink_cost(model, cfg);
        const RoundTotal total = round_total(model, cfg);
        out << pad_left(std::to_string(levels), 8) << pad_left(group_digits(up.index_bits), 14)
            << pad_left(group_fixed1(up.codebook_bits.to_double()), 16)
            << pad_left(group_fixed1(up.total().to_double()), 16)
            << pad_left(group_digits(total.ceil_bits), 14)
            << pad_left(percent2(total.reduction_vs_baseline), 12) << '\n';
    }

    out << "\nnorm-scaled quantiser (one 32-bit norm per layer, full-precision downlink)\n";
    out << pad_left("levels", 8) << pad_left("uplink bits", 14) << pad_left("round total", 14)
        << pad_left("reduction", 12) << '\n';
    for (std::uint32_t levels : grid.qsgd_levels) {
        const QsgdCost qc = qsgd_cost(model, levels);
        out << pad_left(std::to_string(levels), 8) << pad_left(group_digits(qc.uplink_bits), 14)
            << pad_left(group_digits(qc.total_bits), 14)
            << pad_left(percent2(qc.reduction_vs_baseline), 12) << '\n';
    }
    return 0;
}

namespace {

struct SweepRow {
    double value = 0.0;
    std::size_t runs = 0;
    double test_accuracy_mean = 0.0;
    double test_accuracy_std = 0.0;
    double train_accuracy_mean = 0.0;
    double cumulative_bits_mean = 0.0;
    double reduction_mean = 0.0;
};

constexpr const char* kSweepHeader =
    "axis,value,runs,test_accuracy_mean,test_accuracy_std,train_accuracy_mean,"
    "cumulative_bits_mean,reduction_mean";

} // namespace

int cmd_sweep(const ExperimentSpec& spec, const std::string& out_dir, std::ostream& log) {
    const SweepSpec& sweep = spec.sweep;
    if (sweep.axis.empty()) {
        throw config_error(
            "sweep.axis: required for the sweep command (set it in the config or pass --axis)");
    }
    if (sweep.values.empty()) {
        throw config_error("sweep.values: must not be empty");
    }

    std::vector<double> values = sweep.values;
    std::sort(values.begin(), values.end());

    std::vector<SweepRow> rows;
    for (double value : values) {
        ExperimentSpec variant = spec;
        if (sweep.axis == "alpha") {
            variant.federation.partition = PartitionKind::dirichlet;
            variant.federation.dirichlet_alpha = value;
        } else if (sweep.axis == "levels") {
            variant.federation.levels = static_cast<std::uint32_t>(value);
        }
        const std::vector<std::uint64_t> seeds =
            sweep.axis == "seeds"
                ? std::vector<std::uint64_t>{static_cast<std::uint64_t>(value)}
                : sweep.seeds;

        std::vector<double> test_accs;
        double train_acc_sum = 0.0;
        double bits_sum = 0.0;
        double reduction_sum = 0.0;
        for (std::uint64_t seed : seeds) {
            variant.federation.seed = seed;
            const ModelSpec model = ModelSpec::mlp(variant.model_widths);
            auto [train, test] = load_datasets(variant);
            const ExperimentResult result = run_experiment(model, train, test, variant.federation);
            const bool has_rounds = !result.rounds.empty();
            test_accs.push_back(has_rounds ? result.rounds.back().test_accuracy
                                           : result.initial_test.accuracy);
            train_acc_sum += has_rounds ? result.rounds.back().train_accuracy
                                        : result.initial_train.accuracy;
            bits_sum += static_cast<double>(result.cumulative_bits_per_client);
            reduction_sum += result.reduction_vs_baseline;
        }
        SweepRow row;
        row.value = value;
        row.runs = seeds.size();
        const double n = static_cast<double>(seeds.size());
        for (double a : test_accs) row.test_accuracy_mean += a;
        row.test_accuracy_mean /= n;
        double var = 0.0;
        for (double a : test_accs) {
            var += (a - row.test_accuracy_mean) * (a - row.test_accuracy_mean);
        }
        row.test_accuracy_std = std::sqrt(var / n);
        row.train_accuracy_mean = train_acc_sum / n;
        row.cumulative_bits_mean = bits_sum / n;
        row.reduction_mean = reduction_sum / n;
        rows.push_back(row);
        log << sweep.axis << "=" << format_double(value) << ": mean test accuracy "
            << format_double(row.test_accuracy_mean) << " over " << row.runs << " run(s)\n";
    }

    std::string csv = kSweepHeader;
    csv += '\n';
    for (const SweepRow& row : rows) {
        csv += sweep.axis;
        csv += ',';
        csv += format_double(row.value);
        csv += ',';
        csv += std::to_string(row.runs);
        csv += ',';
        csv += format_double(row.test_accuracy_mean);
        csv += ',';
        csv += format_double(row.test_accuracy_std);
        csv += ',';
        csv += format_double(row.train_accuracy_mean);
        csv += ',';
        csv += format_double(row.cumulative_bits_mean);
        csv += ',';
        csv += format_double(row.reduction_mean);
        csv += '\n';
    }
    ensure_dir(out_dir);
    write_text_file(out_dir + "/sweep.csv", csv);
    write_manifest(spec, out_dir, "sweep", {"sweep.csv"});
    log << "wrote " << out_dir << "/sweep.csv, manifest.json\n";
    return 0;
}

} // namespace fedquant
