#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "latdiag/disentangle.hpp"
#include "latdiag/geometry.hpp"
#include "latdiag/json.hpp"
#include "latdiag/matrix.hpp"
#include "latdiag/mi.hpp"
#include "latdiag/probes.hpp"
#include "latdiag/protocol.hpp"
#include "latdiag/stats.hpp"
#include "latdiag/version.hpp"

namespace latdiag::report {

// One named analysis result: the JSON payload is the machine contract, the
// markdown block is derived presentation.
struct Section {
    std::string name;
    json::Value payload;
    std::string markdown;
};

struct ReportBundle {
    std::string tool_version = kVersion;
    std::vector<std::string> invocation;
    std::uint64_t seed = 0;
    std::vector<Section> sections;
    std::vector<std::string> flags;
};

namespace detail {

inline std::string md_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

inline std::string table_row(const std::vector<std::string>& cells) {
    std::string out = "|";
    for (const auto& c : cells) out += " " + c + " |";
    out += "\n";
    return out;
}

inline std::string table_header(const std::vector<std::string>& cells) {
    std::string out = table_row(cells);
    out += "|";
    for (std::size_t i = 0; i < cells.size(); ++i) out += "---|";
    out += "\n";
    return out;
}

} // namespace detail

inline json::Value test_result_json(const stats::TestResult& r) {
    json::Value v = json::Value::object();
    v["mean_diff"] = r.mean_diff;
    v["t"] = r.t_stat;
    v["df"] = static_cast<std::int64_t>(r.df);
    v["p_two_sided"] = r.p_two_sided;
    json::Value ci = json::Value::array();
    ci.push_back(r.ci_lo);
    ci.push_back(r.ci_hi);
    v["ci95"] = std::move(ci);
    v["infinite_t"] = r.infinite_t;
    return v;
}

// Probe section; either probe kind may be absent. Rows follow the dataset's
// factor order with Overall last, matching the usual probe-table layout.
inline Section probe_section(const std::vector<std::string>& factor_order,
                             const probes::ProbeResult* linear,
                             const probes::ProbeResult* mlp) {
    Section s;
    s.name = "probe";
    s.payload = json::Value::object();
    json::Value folds = json::Value::object();
    for (const auto& factor : factor_order) {
        json::Value cell = json::Value::object();
        json::Value fold_cell = json::Value::object();
        if (linear != nullptr) {
            cell["linear"] = linear->per_factor_r2.at(factor);
            json::Value arr = json::Value::array();
            for (double v : linear->per_fold_r2.at(factor)) arr.push_back(v);
            fold_cell["linear"] = std::move(arr);
        }
        if (mlp != nullptr) {
            cell["mlp"] = mlp->per_factor_r2.at(factor);
            json::Value arr = json::Value::array();
            for (double v : mlp->per_fold_r2.at(factor)) arr.push_back(v);
            fold_cell["mlp"] = std::move(arr);
        }
        s.payload[factor] = std::move(cell);
        folds[factor] = std::move(fold_cell);
    }
    json::Value overall = json::Value::object();
    if (linear != nullptr) overall["linear"] = linear->overall_r2;
    if (mlp != nullptr) overall["mlp"] = mlp->overall_r2;
    s.payload["overall"] = std::move(overall);
    s.payload["folds"] = std::move(folds);

    std::vector<std::string> header{"Factor"};
    if (linear != nullptr) header.push_back("Linear R2");
    if (mlp != nullptr) header.push_back("MLP R2");
    s.markdown = detail::table_header(header);
    for (const auto& factor : factor_order) {
        std::vector<std::string> row{factor};
        if (linear != nullptr) row.push_back(detail::md_num(linear->per_factor_r2.at(factor)));
        if (mlp != nullptr) row.push_back(detail::md_num(mlp->per_factor_r2.at(factor)));
        s.markdown += detail::table_row(row);
    }
    std::vector<std::string> overall_row{"Overall"};
    if (linear != nullptr) overall_row.push_back(detail::md_num(linear->overall_r2));
    if (mlp != nullptr) overall_row.push_back(detail::md_num(mlp->overall_r2));
    s.markdown += detail::table_row(overall_row);
    return s;
}

inline Section mi_section(const std::vector<std::string>& factor_order,
                          const info::MIReport& report, const std::string& mode) {
    Section s;
    s.name = "mi";
    s.payload = json::Value::object();
    json::Value per = json::Value::object();
    for (const auto& [name, v] : report.per_factor_mi) per[name] = v;
    s.payload["per_factor_nats"] = std::move(per);
    s.payload["overall_nats"] = report.overall_mi;
    s.payload["k"] = static_cast<std::int64_t>(report.k);
    s.payload["mode"] = mode;

    s.markdown = detail::table_header({"Factor", "MI (nats)"});
    for (const auto& factor : factor_order) {
        s.markdown += detail::table_row({factor, detail::md_num(report.per_factor_mi.at(factor))});
    }
    s.markdown += detail::table_row({"Overall", detail::md_num(report.overall_mi)});
    return s;
}

inline Section mig_section(const info::MigResult& r) {
    Section s;
    s.name = "mig";
    s.payload = json::Value::object();
    s.payload["score"] = r.score;
    json::Value per = json::Value::object();
    for (const auto& [name, v] : r.per_factor) per[name] = v;
    s.payload["per_factor"] = std::move(per);
    json::Value skipped = json::Value::array();
    for (const auto& name : r.skipped) skipped.push_back(name);
    s.payload["skipped_factors"] = std::move(skipped);
    s.payload["bins"] = static_cast<std::int64_t>(r.bins);

    s.markdown = detail::table_header({"Factor", "MIG"});
    for (const auto& [name, v] : r.per_factor) {
        s.markdown += detail::table_row({name, detail::md_num(v)});
    }
    s.markdown += detail::table_row({"Overall", detail::md_num(r.score)});
    return s;
}

inline Section dci_section(const info::DciResult& r, bool include_importance = true) {
    Section s;
    s.name = "dci";
    s.payload = json::Value::object();
    s.payload["disentanglement"] = r.disentanglement;
    s.payload["completeness"] = r.completeness;
    s.payload["informativeness"] = r.informativeness;
    if (include_importance) {
        json::Value rows = json::Value::array();
        for (std::size_t d = 0; d < r.importance.rows; ++d) {
            json::Value row = json::Value::array();
            for (std::size_t f = 0; f < r.importance.cols; ++f) {
                row.push_back(r.importance.at(d, f));
            }
            rows.push_back(std::move(row));
        }
        s.payload["importance"] = std::move(rows);
    }
    s.markdown = detail::table_header({"Metric", "Value"});
    s.markdown += detail::table_row({"DCI Disentanglement", detail::md_num(r.disentanglement)});
    s.markdown += detail::table_row({"DCI Completeness", detail::md_num(r.completeness)});
    s.markdown += detail::table_row({"DCI Informativeness (error)", detail::md_num(r.informativeness)});
    return s;
}

inline Section sap_section(const info::SapResult& r) {
    Section s;
    s.name = "sap";
    s.payload = json::Value::object();
    s.payload["score"] = r.score;
    json::Value per = json::Value::object();
    for (const auto& [name, v] : r.per_factor) per[name] = v;
    s.payload["per_factor"] = std::move(per);

    s.markdown = detail::table_header({"Factor", "SAP"});
    for (const auto& [name, v] : r.per_factor) {
        s.markdown += detail::table_row({name, detail::md_num(v)});
    }
    s.markdown += detail::table_row({"Overall", detail::md_num(r.score)});
    return s;
}

inline Section alignment_section(const info::AlignmentReport& r) {
    Section s;
    s.name = "alignment";
    s.payload = json::Value::object();
    s.payload["score"] = r.score;
    s.payload["chance_level"] = r.chance_level;
    json::Value ratios = json::Value::array();
    for (double v : r.per_dim_ratio) ratios.push_back(v);
    s.payload["per_dim_ratio"] = std::move(ratios);
    json::Value flagged = json::Value::array();
    for (std::size_t d : r.flagged_dims) flagged.push_back(static_cast<std::int64_t>(d));
    s.payload["flagged_dims"] = std::move(flagged);

    s.markdown = detail::table_header({"Metric", "Value"});
    s.markdown += detail::table_row({"Alignment score", detail::md_num(r.score)});
    s.markdown += detail::table_row({"Chance level", detail::md_num(r.chance_level)});
    s.markdown += detail::table_row({"Zero-denominator dims",
                                     std::to_string(r.flagged_dims.size())});
    return s;
}

inline Section geometry_section(const geometry::GeometryReport& r,
                                bool include_spectrum = true) {
    Section s;
    s.name = "geometry";
    s.payload = json::Value::object();
    s.payload["effective_rank"] = r.effective_rank;
    s.payload["participation_ratio"] = r.participation_ratio;
    s.payload["condition_number"] = r.condition_number;
    if (include_spectrum) {
        json::Value sv = json::Value::array();
        for (double v : r.singular_values) sv.push_back(v);
        s.payload["singular_values"] = std::move(sv);
    }
    s.markdown = detail::table_header({"Metric", "Value"});
    s.markdown += detail::table_row({"Effective rank", detail::md_num(r.effective_rank)});
    s.markdown += detail::table_row({"Participation ratio", detail::md_num(r.participation_ratio)});
    s.markdown += detail::table_row({"Condition number", detail::md_num(r.condition_number)});
    return s;
}

inline json::Value bundle_json(const ReportBundle& bundle) {
    json::Value root = json::Value::object();
    root["tool_version"] = bundle.tool_version;
    json::Value inv = json::Value::array();
    for (const auto& a : bundle.invocation) inv.push_back(a);
    root["invocation"] = std::move(inv);
    root["seed"] = static_cast<std::int64_t>(bundle.seed);
    json::Value sections = json::Value::object();
    for (const auto& s : bundle.sections) sections[s.name] = s.payload;
    root["sections"] = std::move(sections);
    json::Value flags = json::Value::array();
    for (const auto& f : bundle.flags) flags.push_back(f);
    root["flags"] = std::move(flags);
    return root;
}

inline std::string bundle_markdown(const ReportBundle& bundle) {
    std::string out = "# latdiag report\n\n";
    out += "- tool_version: " + bundle.tool_version + "\n";
    out += "- seed: " + std::to_string(bundle.seed) + "\n";
    std::string inv;
    for (const auto& a : bundle.invocation) {
        if (!inv.empty()) inv += " ";
        inv += a;
    }
    out += "- invocation: `" + inv + "`\n";
    for (const auto& s : bundle.sections) {
        out += "\n## " + s.name + "\n\n" + s.markdown;
    }
    if (!bundle.flags.empty()) {
        out += "\n## flags\n\n";
        for (const auto& f : bundle.flags) out += "- " + f + "\n";
    }
    return out;
}

struct FullReportConfig {
    std::size_t k = 5;
    std::size_t bins = 20;
    std::size_t folds = 5;
    double alpha = 1.0;
    std::size_t mlp_hidden = 64;
    std::size_t mlp_epochs = 200;
    double mlp_learning_rate = 1e-3;
    std::size_t mlp_patience = 20;
    Activation mlp_activation = Activation::Tanh;
    std::uint64_t seed = 0;
    unsigned threads = 1;
};

// Substream ids for the full-report pipeline stages.
namespace stage_seed {
inline constexpr std::uint64_t kLinearProbe = 11;
inline constexpr std::uint64_t kMlpProbe = 12;
inline constexpr std::uint64_t kMiJitter = 13;
inline constexpr std::uint64_t kDci = 14;
} // namespace stage_seed

// Runs the whole diagnostics pipeline: linear and MLP probes, per-factor MI,
// MIG, DCI, SAP, factor alignment (when a partition applies), and SVD
// geometry. Every stochastic stage derives its seed from config.seed.
inline ReportBundle full_report(const Dataset& dataset,
                                const std::optional<FactorPartition>& partition,
                                const FullReportConfig& config) {
    ReportBundle bundle;
    bundle.seed = config.seed;

    probes::ProbeConfig pc;
    pc.folds = config.folds;
    pc.ridge_alpha = config.alpha;
    pc.mlp_hidden = config.mlp_hidden;
    pc.mlp_epochs = config.mlp_epochs;
    pc.mlp_learning_rate = config.mlp_learning_rate;
    pc.mlp_patience = config.mlp_patience;
    pc.mlp_activation = config.mlp_activation;
    pc.threads = config.threads;

    pc.kind = probes::ProbeKind::Linear;
    pc.seed = substream(config.seed, stage_seed::kLinearProbe);
    const probes::ProbeResult linear = probes::cv_probe(dataset, pc);
    pc.kind = probes::ProbeKind::Mlp;
    pc.seed = substream(config.seed, stage_seed::kMlpProbe);
    const probes::ProbeResult mlp = probes::cv_probe(dataset, pc);
    bundle.sections.push_back(
        probe_section(dataset.factors.factor_names, &linear, &mlp));

    const info::MIReport mi =
        info::mi_per_factor(dataset, config.k, info::MiMode::MaxDim,
                            substream(config.seed, stage_seed::kMiJitter),
                            config.threads);
    bundle.sections.push_back(mi_section(dataset.factors.factor_names, mi, "max_dim"));
    for (const auto& f : mi.flags) bundle.flags.push_back(f);

    const info::MigResult mig_r = info::mig(dataset, config.bins);
    bundle.sections.push_back(mig_section(mig_r));
    for (const auto& name : mig_r.skipped) {
        bundle.flags.push_back("mig: factor \"" + name + "\" skipped (zero histogram entropy)");
    }

    const info::DciResult dci_r = info::dci(dataset, config.folds, config.alpha,
                                            substream(config.seed, stage_seed::kDci));
    bundle.sections.push_back(dci_section(dci_r));

    bundle.sections.push_back(sap_section(info::sap(dataset)));

    std::optional<FactorPartition> effective = partition;
    if (!effective.has_value() && dataset.repr.dims() >= 24) {
        const FactorPartition def = default_partition();
        bool names_ok = true;
        for (const auto& e : def.entries) {
            bool found = false;
            for (const auto& n : dataset.factors.factor_names) {
                if (n == e.factor_name) found = true;
            }
            if (!found) names_ok = false;
        }
        if (names_ok) effective = def;
    }
    if (effective.has_value()) {
        const info::AlignmentReport align = info::factor_alignment(dataset, *effective);
        bundle.sections.push_back(alignment_section(align));
        if (!align.flagged_dims.empty()) {
            bundle.flags.push_back("alignment: " + std::to_string(align.flagged_dims.size()) +
                                   " dim(s) with zero correlation denominator");
        }
    } else {
        bundle.flags.push_back(
            "alignment skipped: no partition given and the default one does not apply");
    }

    bundle.sections.push_back(
        geometry_section(geometry::svd_geometry(dataset.repr), false));
    return bundle;
}

} // namespace latdiag::report
