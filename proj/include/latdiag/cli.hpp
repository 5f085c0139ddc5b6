#pragma once

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "latdiag/disentangle.hpp"
#include "latdiag/error.hpp"
#include "latdiag/geometry.hpp"
#include "latdiag/io.hpp"
#include "latdiag/matrix.hpp"
#include "latdiag/mi.hpp"
#include "latdiag/probes.hpp"
#include "latdiag/protocol.hpp"
#include "latdiag/report.hpp"
#include "latdiag/stats.hpp"
#include "latdiag/synth.hpp"
#include "latdiag/version.hpp"

namespace latdiag::cli {

namespace detail {

inline bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline std::vector<std::string> generic_names(const char* prefix, std::size_t n) {
    std::vector<std::string> names(n);
    for (std::size_t i = 0; i < n; ++i) names[i] = prefix + std::to_string(i);
    return names;
}

// Binary inputs carry no names; synthesize them.
inline RepresentationSet load_repr_any(const std::string& path) {
    if (ends_with(path, ".bin")) {
        Matrix m = io::load_bin(path);
        auto names = generic_names("z", m.cols);
        return RepresentationSet{std::move(m), std::move(names)};
    }
    return io::load_repr_csv(path);
}

inline FactorSet load_factors_any(const std::string& path) {
    if (ends_with(path, ".bin")) {
        Matrix m = io::load_bin(path);
        auto names = generic_names("f", m.cols);
        return FactorSet{std::move(m), std::move(names)};
    }
    return io::load_factors_csv(path);
}

inline Dataset load_dataset(const std::string& repr_path,
                            const std::string& factors_path) {
    return validate_dataset(load_repr_any(repr_path), load_factors_any(factors_path));
}

inline void save_matrix_any(const std::string& path,
                            const std::vector<std::string>& names, const Matrix& m) {
    if (ends_with(path, ".bin")) {
        io::save_bin(m, path);
    } else {
        io::save_csv_matrix(path, names, m);
    }
}

inline void emit(const report::ReportBundle& bundle, const std::string& out_path,
                 const std::string& format) {
    std::string text;
    if (format == "md") {
        text = report::bundle_markdown(bundle);
    } else {
        text = report::bundle_json(bundle).dump() + "\n";
    }
    if (out_path.empty()) {
        std::cout << text;
    } else {
        io::detail::write_file(out_path, text);
    }
}

inline std::vector<long long> load_steps_csv(const std::string& path) {
    const auto t = protocol::detail::read_csv_table(path);
    const std::size_t c = protocol::detail::column_index(t, "step", path);
    std::vector<long long> steps;
    steps.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        steps.push_back(protocol::detail::parse_int(
            t.rows[r][c], path + ": row " + std::to_string(r + 1)));
    }
    return steps;
}

} // namespace detail

// All option state for one invocation.
struct Options {
    std::string repr_path, factors_path, partition_path, out_path;
    std::string format = "json";
    std::uint64_t seed = 0;
    unsigned threads = 1;

    // synth
    std::string synth_kind = "axis";
    std::size_t synth_n = 1000, synth_dims = 24, synth_factors = 5, synth_rank = 5;
    double synth_noise = 0.0, synth_rho = 0.0;
    std::string out_repr_path, out_factors_path;

    // probe / report
    std::string probe_kind = "linear";
    std::size_t folds = 5;
    double alpha = 1.0;
    std::size_t mlp_hidden = 64, mlp_epochs = 200, mlp_patience = 20;
    double mlp_lr = 1e-3;
    std::string mlp_activation = "tanh";

    // mi / mig
    std::size_t k = 5;
    std::string mi_mode = "max_dim";
    std::size_t bins = 20;

    // geometry
    bool no_center = false;
    double rel_tol = 1e-10;

    // gradients
    std::string part_path, total_path, steps_path;

    // protocol
    std::string curves_path, id_rewards_path, baseline_model;
    std::string traces_path, push_steps_path;
    double threshold = 1.5;
    std::size_t window = 40;
    bool include_push_step = false;
    std::string records_path;

    // stats
    std::string pairs_path, pvalues_path, table_path;
};

namespace detail {

inline report::ReportBundle make_bundle(const std::vector<std::string>& args,
                                        std::uint64_t seed) {
    report::ReportBundle bundle;
    bundle.invocation.push_back(kToolName);
    bundle.invocation.insert(bundle.invocation.end(), args.begin(), args.end());
    bundle.seed = seed;
    return bundle;
}

inline void run_synth(const Options& opt) {
    synth::SynthSpec spec;
    spec.n_samples = opt.synth_n;
    spec.n_factors = opt.synth_factors;
    spec.n_dims = opt.synth_dims;
    spec.noise_sigma = opt.synth_noise;
    spec.seed = opt.seed;

    if (opt.synth_kind == "axis" || opt.synth_kind == "rotated" ||
        opt.synth_kind == "null") {
        if (opt.out_repr_path.empty() || opt.out_factors_path.empty()) {
            throw UsageError("synth: --out-repr and --out-factors are required for kind \"" +
                             opt.synth_kind + "\"");
        }
        Dataset ds;
        if (opt.synth_kind == "axis") ds = synth::gen_axis_aligned(spec);
        else if (opt.synth_kind == "rotated") ds = synth::gen_rotated(spec);
        else ds = synth::gen_null(spec);
        save_matrix_any(opt.out_repr_path, ds.repr.dim_names, ds.repr.matrix);
        save_matrix_any(opt.out_factors_path, ds.factors.factor_names, ds.factors.matrix);
    } else if (opt.synth_kind == "lowrank") {
        if (opt.out_repr_path.empty()) {
            throw UsageError("synth: --out-repr is required for kind \"lowrank\"");
        }
        const RepresentationSet repr =
            synth::gen_lowrank(opt.synth_n, opt.synth_dims, opt.synth_rank, opt.seed);
        save_matrix_any(opt.out_repr_path, repr.dim_names, repr.matrix);
    } else { // pair
        if (opt.out_path.empty()) {
            throw UsageError("synth: --out is required for kind \"pair\"");
        }
        const auto [x, y] = synth::gen_gaussian_pair(opt.synth_n, opt.synth_rho, opt.seed);
        Matrix m(x.size(), 2);
        for (std::size_t i = 0; i < x.size(); ++i) {
            m.at(i, 0) = x[i];
            m.at(i, 1) = y[i];
        }
        save_matrix_any(opt.out_path, {"x", "y"}, m);
    }
}

inline Activation parse_activation(const std::string& name) {
    return name == "relu" ? Activation::Relu : Activation::Tanh;
}

inline void run_probe(const Options& opt, report::ReportBundle& bundle) {
    const Dataset ds = load_dataset(opt.repr_path, opt.factors_path);
    probes::ProbeConfig pc;
    pc.folds = opt.folds;
    pc.ridge_alpha = opt.alpha;
    pc.mlp_hidden = opt.mlp_hidden;
    pc.mlp_epochs = opt.mlp_epochs;
    pc.mlp_learning_rate = opt.mlp_lr;
    pc.mlp_patience = opt.mlp_patience;
    pc.mlp_activation = parse_activation(opt.mlp_activation);
    pc.threads = opt.threads;

    std::optional<probes::ProbeResult> linear, mlp;
    if (opt.probe_kind == "linear" || opt.probe_kind == "both") {
        pc.kind = probes::ProbeKind::Linear;
        pc.seed = substream(opt.seed, report::stage_seed::kLinearProbe);
        linear = probes::cv_probe(ds, pc);
    }
    if (opt.probe_kind == "mlp" || opt.probe_kind == "both") {
        pc.kind = probes::ProbeKind::Mlp;
        pc.seed = substream(opt.seed, report::stage_seed::kMlpProbe);
        mlp = probes::cv_probe(ds, pc);
    }
    bundle.sections.push_back(report::probe_section(
        ds.factors.factor_names, linear ? &*linear : nullptr, mlp ? &*mlp : nullptr));
}

inline void run_mi(const Options& opt, report::ReportBundle& bundle) {
    const Dataset ds = load_dataset(opt.repr_path, opt.factors_path);
    const info::MiMode mode =
        opt.mi_mode == "joint" ? info::MiMode::Joint : info::MiMode::MaxDim;
    const info::MIReport mi = info::mi_per_factor(
        ds, opt.k, mode, substream(opt.seed, report::stage_seed::kMiJitter),
        opt.threads);
    bundle.sections.push_back(report::mi_section(ds.factors.factor_names, mi, opt.mi_mode));
    for (const auto& f : mi.flags) bundle.flags.push_back(f);
}

inline void run_mig(const Options& opt, report::ReportBundle& bundle) {
    const Dataset ds = load_dataset(opt.repr_path, opt.factors_path);
    const info::MigResult r = info::mig(ds, opt.bins);
    bundle.sections.push_back(report::mig_section(r));
    for (const auto& name : r.skipped) {
        bundle.flags.push_back("mig: factor \"" + name + "\" skipped (zero histogram entropy)");
    }
}

inline void run_dci(const Options& opt, report::ReportBundle& bundle) {
    const Dataset ds = load_dataset(opt.repr_path, opt.factors_path);
    const info::DciResult r = info::dci(ds, opt.folds, opt.alpha,
                                        substream(opt.seed, report::stage_seed::kDci));
    bundle.sections.push_back(report::dci_section(r));
}

inline void run_sap(const Options& opt, report::ReportBundle& bundle) {
    const Dataset ds = load_dataset(opt.repr_path, opt.factors_path);
    bundle.sections.push_back(report::sap_section(info::sap(ds)));
}

inline void run_alignment(const Options& opt, report::ReportBundle& bundle) {
    const Dataset ds = load_dataset(opt.repr_path, opt.factors_path);
    const FactorPartition partition = opt.partition_path.empty()
                                          ? default_partition()
                                          : io::load_partition(opt.partition_path);
    const info::AlignmentReport r = info::factor_alignment(ds, partition);
    bundle.sections.push_back(report::alignment_section(r));
    if (!r.flagged_dims.empty()) {
        bundle.flags.push_back("alignment: " + std::to_string(r.flagged_dims.size()) +
                               " dim(s) with zero correlation denominator");
    }
}

inline void run_geometry(const Options& opt, report::ReportBundle& bundle) {
    const RepresentationSet repr = load_repr_any(opt.repr_path);
    check_matrix(repr.matrix, "representations");
    const geometry::GeometryReport r =
        geometry::svd_geometry(repr, !opt.no_center, opt.rel_tol);
    bundle.sections.push_back(report::geometry_section(r));
}

inline void run_gradients(const Options& opt, report::ReportBundle& bundle) {
    const std::vector<long long> steps = load_steps_csv(opt.steps_path);
    const geometry::GradientSeries part =
        geometry::make_gradient_series(steps, io::load_bin(opt.part_path));
    const geometry::GradientSeries total =
        geometry::make_gradient_series(steps, io::load_bin(opt.total_path));
    const geometry::CosineSummary cos = geometry::cosine_series(part, total);
    const std::vector<double> frac = geometry::norm_fraction(part, total);

    report::Section s;
    s.name = "gradients";
    s.payload = json::Value::object();
    json::Value cosine = json::Value::object();
    json::Value per = json::Value::array();
    for (double v : cos.per_step) per.push_back(v);
    cosine["per_step"] = std::move(per);
    cosine["mean"] = cos.mean;
    cosine["std"] = cos.stddev;
    s.payload["cosine"] = std::move(cosine);
    json::Value fraction = json::Value::object();
    json::Value perf = json::Value::array();
    double frac_mean = 0.0;
    for (double v : frac) {
        perf.push_back(v);
        frac_mean += v;
    }
    frac_mean /= static_cast<double>(frac.size());
    fraction["per_step"] = std::move(perf);
    fraction["mean"] = frac_mean;
    s.payload["norm_fraction"] = std::move(fraction);

    s.markdown = report::detail::table_header({"Metric", "Value"});
    s.markdown += report::detail::table_row(
        {"Mean cosine", report::detail::md_num(cos.mean)});
    s.markdown += report::detail::table_row(
        {"Cosine std", report::detail::md_num(cos.stddev)});
    s.markdown += report::detail::table_row(
        {"Mean norm fraction", report::detail::md_num(frac_mean)});
    bundle.sections.push_back(std::move(s));
}

inline void run_sweep(const Options& opt, report::ReportBundle& bundle) {
    const std::vector<protocol::SweepCurve> curves =
        protocol::load_sweep_csv(opt.curves_path);

    std::map<std::pair<std::string, std::string>, double> id_rewards;
    if (!opt.id_rewards_path.empty()) {
        const auto t = protocol::detail::read_csv_table(opt.id_rewards_path);
        const std::size_t c_model =
            protocol::detail::column_index(t, "model", opt.id_rewards_path);
        const std::size_t c_seed =
            protocol::detail::column_index(t, "seed", opt.id_rewards_path);
        const std::size_t c_id =
            protocol::detail::column_index(t, "id_reward", opt.id_rewards_path);
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            id_rewards[{t.rows[r][c_model], t.rows[r][c_seed]}] =
                io::detail::parse_double(t.rows[r][c_id], r + 1, "id_reward");
        }
    }

    report::Section s;
    s.name = "sweep";
    s.payload = json::Value::object();
    json::Value curve_list = json::Value::array();
    s.markdown = report::detail::table_header(
        {"Model", "Seed", "Sensitivity", "Severe mean", "Worst case"});
    for (const auto& curve : curves) {
        json::Value c = json::Value::object();
        c["model"] = curve.model;
        c["seed"] = curve.seed;
        const double sens = protocol::sensitivity(curve);
        const double severe = protocol::severe_mean(curve);
        const double worst = protocol::worst_case(curve);
        c["sensitivity"] = sens;
        c["severe_mean"] = severe;
        c["worst_case"] = worst;
        if (!opt.id_rewards_path.empty()) {
            const auto it = id_rewards.find({curve.model, curve.seed});
            if (it == id_rewards.end()) {
                throw DataError("sweep: no id_reward entry for model \"" + curve.model +
                                "\" seed \"" + curve.seed + "\"");
            }
            const protocol::Degradation d = protocol::degradation(it->second, severe);
            json::Value dj = json::Value::object();
            dj["abs"] = d.abs;
            dj["pct"] = d.pct;
            dj["improved"] = d.improved;
            c["degradation"] = std::move(dj);
            if (d.improved) {
                bundle.flags.push_back("sweep: model \"" + curve.model + "\" seed \"" +
                                       curve.seed + "\" improved under OOD");
            }
        }
        curve_list.push_back(std::move(c));
        s.markdown += report::detail::table_row(
            {curve.model, curve.seed, report::detail::md_num(sens),
             report::detail::md_num(severe), report::detail::md_num(worst)});
    }
    s.payload["curves"] = std::move(curve_list);

    if (!opt.baseline_model.empty()) {
        json::Value crossings = json::Value::array();
        for (const auto& curve : curves) {
            if (curve.model == opt.baseline_model) continue;
            const protocol::SweepCurve* base = nullptr;
            for (const auto& other : curves) {
                if (other.model == opt.baseline_model && other.seed == curve.seed) {
                    base = &other;
                    break;
                }
            }
            if (base == nullptr) {
                throw DataError("sweep: no baseline curve for model \"" +
                                opt.baseline_model + "\" seed \"" + curve.seed + "\"");
            }
            json::Value x = json::Value::object();
            x["model"] = curve.model;
            x["seed"] = curve.seed;
            const std::optional<int> level = protocol::crossover(curve, *base);
            x["crossed"] = level.has_value();
            if (level.has_value()) x["level"] = static_cast<std::int64_t>(*level);
            crossings.push_back(std::move(x));
        }
        s.payload["crossover_vs_" + opt.baseline_model] = std::move(crossings);
    }
    bundle.sections.push_back(std::move(s));
}

inline void run_recovery(const Options& opt, report::ReportBundle& bundle) {
    const auto traces =
        protocol::load_traces_csv(opt.traces_path, opt.window, opt.push_steps_path);

    report::Section s;
    s.name = "recovery";
    s.payload = json::Value::object();
    json::Value episodes = json::Value::array();
    double steps_sum = 0.0, peak_sum = 0.0;
    std::size_t censored = 0;
    s.markdown = report::detail::table_header(
        {"Episode", "Recovery steps", "Censored", "Peak error"});
    for (const auto& [id, trace] : traces) {
        const protocol::Recovery rec =
            protocol::recovery_time(trace, opt.threshold, opt.include_push_step);
        const double peak = protocol::peak_error(trace);
        json::Value e = json::Value::object();
        e["episode"] = id;
        e["steps"] = static_cast<std::int64_t>(rec.steps);
        e["censored"] = rec.censored;
        e["peak_error"] = peak;
        episodes.push_back(std::move(e));
        steps_sum += static_cast<double>(rec.steps);
        peak_sum += peak;
        if (rec.censored) {
            ++censored;
            bundle.flags.push_back("recovery: episode \"" + id +
                                   "\" censored at window " + std::to_string(opt.window));
        }
        s.markdown += report::detail::table_row(
            {id, std::to_string(rec.steps), rec.censored ? "yes" : "no",
             report::detail::md_num(peak)});
    }
    s.payload["episodes"] = std::move(episodes);
    json::Value agg = json::Value::object();
    agg["mean_steps"] = steps_sum / static_cast<double>(traces.size());
    agg["mean_peak_error"] = peak_sum / static_cast<double>(traces.size());
    agg["censored_count"] = static_cast<std::int64_t>(censored);
    agg["episodes"] = static_cast<std::int64_t>(traces.size());
    agg["threshold"] = opt.threshold;
    agg["window"] = static_cast<std::int64_t>(opt.window);
    s.payload["aggregate"] = std::move(agg);
    bundle.sections.push_back(std::move(s));
}

inline void run_intervene(const Options& opt, report::ReportBundle& bundle) {
    const auto records = protocol::load_interventions_csv(opt.records_path);
    const auto deltas = protocol::intervention_delta(records);

    report::Section s;
    s.name = "intervention";
    s.payload = json::Value::object();
    json::Value per = json::Value::object();
    s.markdown = report::detail::table_header({"Factor", "Avg |dReward|"});
    for (const auto& [factor, delta] : deltas) {
        per[factor] = delta;
        s.markdown += report::detail::table_row({factor, report::detail::md_num(delta)});
    }
    s.payload["per_factor"] = std::move(per);
    s.payload["records"] = static_cast<std::int64_t>(records.size());
    bundle.sections.push_back(std::move(s));
}

inline void run_ttest(const Options& opt, report::ReportBundle& bundle) {
    const auto t = protocol::detail::read_csv_table(opt.pairs_path);
    const std::size_t c_seed = protocol::detail::column_index(t, "seed", opt.pairs_path);
    const std::size_t c_a = protocol::detail::column_index(t, "a", opt.pairs_path);
    const std::size_t c_b = protocol::detail::column_index(t, "b", opt.pairs_path);
    stats::PairedSample sample;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        sample.labels.push_back(t.rows[r][c_seed]);
        sample.a.push_back(io::detail::parse_double(t.rows[r][c_a], r + 1, "a"));
        sample.b.push_back(io::detail::parse_double(t.rows[r][c_b], r + 1, "b"));
    }
    const stats::TestResult r = stats::paired_t(sample);

    report::Section s;
    s.name = "ttest";
    s.payload = report::test_result_json(r);
    s.payload["n"] = static_cast<std::int64_t>(sample.a.size());
    if (r.infinite_t) bundle.flags.push_back("ttest: zero-variance differences (infinite t)");
    s.markdown = report::detail::table_header({"Metric", "Value"});
    s.markdown += report::detail::table_row({"Mean diff", report::detail::md_num(r.mean_diff)});
    s.markdown += report::detail::table_row({"t", report::detail::md_num(r.t_stat)});
    s.markdown += report::detail::table_row({"df", std::to_string(r.df)});
    s.markdown += report::detail::table_row({"p (two-sided)", report::detail::md_num(r.p_two_sided)});
    s.markdown += report::detail::table_row(
        {"95% CI", "[" + report::detail::md_num(r.ci_lo) + ", " +
                       report::detail::md_num(r.ci_hi) + "]"});
    bundle.sections.push_back(std::move(s));
}

inline void run_holm(const Options& opt, report::ReportBundle& bundle) {
    const auto t = protocol::detail::read_csv_table(opt.pvalues_path);
    const std::size_t c_p = protocol::detail::column_index(t, "p", opt.pvalues_path);
    const auto c_label = protocol::detail::optional_column(t, "label");
    std::vector<double> raw;
    std::vector<std::string> labels;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        raw.push_back(io::detail::parse_double(t.rows[r][c_p], r + 1, "p"));
        labels.push_back(c_label.has_value() ? t.rows[r][*c_label]
                                             : "p" + std::to_string(r));
    }
    const std::vector<double> adjusted = stats::holm_bonferroni(raw);

    report::Section s;
    s.name = "holm";
    s.payload = json::Value::object();
    json::Value raw_j = json::Value::array(), adj_j = json::Value::array(),
                lab_j = json::Value::array();
    s.markdown = report::detail::table_header({"Label", "p", "p (Holm)"});
    for (std::size_t i = 0; i < raw.size(); ++i) {
        raw_j.push_back(raw[i]);
        adj_j.push_back(adjusted[i]);
        lab_j.push_back(labels[i]);
        s.markdown += report::detail::table_row(
            {labels[i], report::detail::md_num(raw[i]), report::detail::md_num(adjusted[i])});
    }
    s.payload["raw"] = std::move(raw_j);
    s.payload["adjusted"] = std::move(adj_j);
    s.payload["labels"] = std::move(lab_j);
    bundle.sections.push_back(std::move(s));
}

inline void run_factorial(const Options& opt, report::ReportBundle& bundle) {
    const auto t = protocol::detail::read_csv_table(opt.table_path);
    const std::size_t c_seed = protocol::detail::column_index(t, "seed", opt.table_path);
    const std::size_t c_a = protocol::detail::column_index(t, "level_a", opt.table_path);
    const std::size_t c_b = protocol::detail::column_index(t, "level_b", opt.table_path);
    const std::size_t c_v = protocol::detail::column_index(t, "value", opt.table_path);
    stats::FactorialTable table;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        stats::FactorialCell cell;
        cell.seed = t.rows[r][c_seed];
        cell.level_a = static_cast<int>(protocol::detail::parse_int(
            t.rows[r][c_a], opt.table_path + ": row " + std::to_string(r + 1)));
        cell.level_b = static_cast<int>(protocol::detail::parse_int(
            t.rows[r][c_b], opt.table_path + ": row " + std::to_string(r + 1)));
        cell.value = io::detail::parse_double(t.rows[r][c_v], r + 1, "value");
        table.rows.push_back(std::move(cell));
    }
    const stats::FactorialEffects fx = stats::factorial_effects(table);

    report::Section s;
    s.name = "factorial";
    s.payload = json::Value::object();
    s.payload["effect_a"] = report::test_result_json(fx.effect_a);
    s.payload["effect_b"] = report::test_result_json(fx.effect_b);
    s.payload["interaction"] = report::test_result_json(fx.interaction);
    s.payload["n_seeds"] = static_cast<std::int64_t>(fx.effect_a.df + 1);
    for (const auto* r : {&fx.effect_a, &fx.effect_b, &fx.interaction}) {
        if (r->infinite_t) {
            bundle.flags.push_back("factorial: zero-variance contrast (infinite t)");
            break;
        }
    }
    s.markdown = report::detail::table_header({"Effect", "Mean", "t", "p"});
    const auto row = [&](const char* name, const stats::TestResult& r) {
        s.markdown += report::detail::table_row(
            {name, report::detail::md_num(r.mean_diff), report::detail::md_num(r.t_stat),
             report::detail::md_num(r.p_two_sided)});
    };
    row("A (level_a)", fx.effect_a);
    row("B (level_b)", fx.effect_b);
    row("Interaction", fx.interaction);
    bundle.sections.push_back(std::move(s));
}

inline void run_full_report(const Options& opt, report::ReportBundle& bundle) {
    const Dataset ds = load_dataset(opt.repr_path, opt.factors_path);
    std::optional<FactorPartition> partition;
    if (!opt.partition_path.empty()) {
        partition = io::load_partition(opt.partition_path);
    }
    report::FullReportConfig cfg;
    cfg.k = opt.k;
    cfg.bins = opt.bins;
    cfg.folds = opt.folds;
    cfg.alpha = opt.alpha;
    cfg.mlp_hidden = opt.mlp_hidden;
    cfg.mlp_epochs = opt.mlp_epochs;
    cfg.mlp_learning_rate = opt.mlp_lr;
    cfg.mlp_patience = opt.mlp_patience;
    cfg.mlp_activation = parse_activation(opt.mlp_activation);
    cfg.seed = opt.seed;
    cfg.threads = opt.threads;
    report::ReportBundle full = report::full_report(ds, partition, cfg);
    bundle.sections = std::move(full.sections);
    for (const auto& f : full.flags) bundle.flags.push_back(f);
}

} // namespace detail

// Parses and executes one invocation. Exit codes: 0 success, 2 usage error,
// 3 data validation error, 4 numeric failure.
inline int run(const std::vector<std::string>& args) {
    Options opt;
    CLI::App app{"latent representation diagnostics toolkit"};
    app.set_version_flag("--version", std::string(kToolName) + " " + kVersion);
    app.require_subcommand(1);

    const auto add_dataset_opts = [&](CLI::App* cmd) {
        cmd->add_option("--repr", opt.repr_path, "Representation matrix (CSV or .bin)")
            ->required();
        cmd->add_option("--factors", opt.factors_path, "Factor matrix (CSV or .bin)")
            ->required();
    };
    const auto add_output_opts = [&](CLI::App* cmd) {
        cmd->add_option("--out", opt.out_path, "Output path (stdout when omitted)");
        cmd->add_option("--format", opt.format, "Output format")
            ->check(CLI::IsMember({"json", "md"}));
    };
    const auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", opt.seed, "Seed for all stochastic steps");
    };
    const auto add_threads = [&](CLI::App* cmd) {
        cmd->add_option("--threads", opt.threads, "Worker threads (results identical for any value)");
    };

    CLI::App* synth = app.add_subcommand("synth", "Generate synthetic datasets");
    synth->add_option("--kind", opt.synth_kind, "Generator kind")
        ->check(CLI::IsMember({"axis", "rotated", "null", "lowrank", "pair"}));
    synth->add_option("--n", opt.synth_n, "Sample count");
    synth->add_option("--dims", opt.synth_dims, "Representation dimensions");
    synth->add_option("--factors-n", opt.synth_factors, "Factor count");
    synth->add_option("--noise", opt.synth_noise, "Noise sigma (axis/rotated)");
    synth->add_option("--rank", opt.synth_rank, "Rank (lowrank)");
    synth->add_option("--rho", opt.synth_rho, "Correlation (pair)");
    synth->add_option("--out-repr", opt.out_repr_path, "Representation output path");
    synth->add_option("--out-factors", opt.out_factors_path, "Factor output path");
    synth->add_option("--out", opt.out_path, "Pair output path (pair kind)");
    add_seed(synth);

    CLI::App* probe = app.add_subcommand("probe", "Cross-validated factor probes");
    add_dataset_opts(probe);
    probe->add_option("--kind", opt.probe_kind, "Probe kind")
        ->check(CLI::IsMember({"linear", "mlp", "both"}));
    probe->add_option("--folds", opt.folds, "CV folds");
    probe->add_option("--alpha", opt.alpha, "Ridge penalty");
    probe->add_option("--hidden", opt.mlp_hidden, "MLP hidden units");
    probe->add_option("--epochs", opt.mlp_epochs, "MLP epoch budget");
    probe->add_option("--lr", opt.mlp_lr, "MLP learning rate");
    probe->add_option("--patience", opt.mlp_patience, "MLP early-stopping patience");
    probe->add_option("--activation", opt.mlp_activation, "MLP hidden activation")
        ->check(CLI::IsMember({"tanh", "relu"}));
    add_seed(probe);
    add_threads(probe);
    add_output_opts(probe);

    CLI::App* mi = app.add_subcommand("mi", "KNN mutual information per factor");
    add_dataset_opts(mi);
    mi->add_option("--k", opt.k, "Neighbor count");
    mi->add_option("--mode", opt.mi_mode, "Per-factor aggregation")
        ->check(CLI::IsMember({"max_dim", "joint"}));
    add_seed(mi);
    add_threads(mi);
    add_output_opts(mi);

    CLI::App* mig = app.add_subcommand("mig", "Mutual Information Gap");
    add_dataset_opts(mig);
    mig->add_option("--bins", opt.bins, "Histogram bins");
    add_output_opts(mig);

    CLI::App* dci = app.add_subcommand("dci", "DCI disentanglement metrics");
    add_dataset_opts(dci);
    dci->add_option("--folds", opt.folds, "CV folds for informativeness");
    dci->add_option("--alpha", opt.alpha, "Ridge penalty");
    add_seed(dci);
    add_output_opts(dci);

    CLI::App* sap = app.add_subcommand("sap", "Separated Attribute Predictability");
    add_dataset_opts(sap);
    add_output_opts(sap);

    CLI::App* alignment = app.add_subcommand("alignment", "Within-factor correlation ratio");
    add_dataset_opts(alignment);
    alignment->add_option("--partition", opt.partition_path,
                          "Partition config (default: the 24-d five-factor layout)");
    add_output_opts(alignment);

    CLI::App* geometry = app.add_subcommand("geometry", "SVD representation geometry");
    geometry->add_option("--repr", opt.repr_path, "Representation matrix (CSV or .bin)")
        ->required();
    geometry->add_flag("--no-center", opt.no_center, "Skip column mean centering");
    geometry->add_option("--rel-tol", opt.rel_tol, "Relative singular value cutoff");
    add_output_opts(geometry);

    CLI::App* gradients = app.add_subcommand("gradients", "Gradient cosine and norm fraction");
    gradients->add_option("--part", opt.part_path, "Component gradient series (.bin)")
        ->required();
    gradients->add_option("--total", opt.total_path, "Reference gradient series (.bin)")
        ->required();
    gradients->add_option("--steps", opt.steps_path, "Steps CSV (column: step)")
        ->required();
    add_output_opts(gradients);

    CLI::App* sweep = app.add_subcommand("sweep", "OOD sweep metrics");
    sweep->add_option("--curves", opt.curves_path, "Sweep CSV (model,seed,level,mean_reward)")
        ->required();
    sweep->add_option("--id-rewards", opt.id_rewards_path,
                      "ID rewards CSV (model,seed,id_reward) for degradation");
    sweep->add_option("--baseline", opt.baseline_model, "Baseline model for crossover levels");
    add_output_opts(sweep);

    CLI::App* recovery = app.add_subcommand("recovery", "Push recovery metrics");
    recovery->add_option("--traces", opt.traces_path,
                         "Trace CSV (episode_id,step,tracking_error[,push_step])")
        ->required();
    recovery->add_option("--push-steps", opt.push_steps_path,
                         "Sidecar CSV (episode_id,push_step)");
    recovery->add_option("--threshold", opt.threshold, "Recovery threshold");
    recovery->add_option("--window", opt.window, "Post-push step budget");
    recovery->add_flag("--include-push-step", opt.include_push_step,
                       "Count the push step itself when scanning for recovery");
    add_output_opts(recovery);

    CLI::App* intervene = app.add_subcommand("intervene", "Intervention reward deltas");
    intervene->add_option("--records", opt.records_path,
                          "Intervention CSV (factor,dr_level,seed,baseline_reward,clamped_reward)")
        ->required();
    add_output_opts(intervene);

    CLI::App* ttest = app.add_subcommand("ttest", "Paired t-test");
    ttest->add_option("--pairs", opt.pairs_path, "Pairs CSV (seed,a,b)")->required();
    add_output_opts(ttest);

    CLI::App* holm = app.add_subcommand("holm", "Holm-Bonferroni adjustment");
    holm->add_option("--pvalues", opt.pvalues_path, "CSV with column p (optional label)")
        ->required();
    add_output_opts(holm);

    CLI::App* factorial = app.add_subcommand("factorial", "2x2 factorial effects");
    factorial->add_option("--table", opt.table_path, "CSV (seed,level_a,level_b,value)")
        ->required();
    add_output_opts(factorial);

    CLI::App* full = app.add_subcommand("report", "Full diagnostics pipeline");
    add_dataset_opts(full);
    full->add_option("--partition", opt.partition_path, "Partition config for alignment");
    full->add_option("--k", opt.k, "MI neighbor count");
    full->add_option("--bins", opt.bins, "MIG histogram bins");
    full->add_option("--folds", opt.folds, "CV folds");
    full->add_option("--alpha", opt.alpha, "Ridge penalty");
    full->add_option("--hidden", opt.mlp_hidden, "MLP hidden units");
    full->add_option("--epochs", opt.mlp_epochs, "MLP epoch budget");
    full->add_option("--lr", opt.mlp_lr, "MLP learning rate");
    full->add_option("--patience", opt.mlp_patience, "MLP early-stopping patience");
    full->add_option("--activation", opt.mlp_activation, "MLP hidden activation")
        ->check(CLI::IsMember({"tanh", "relu"}));
    add_seed(full);
    add_threads(full);
    add_output_opts(full);

    try {
        // CLI11's vector overload consumes arguments in reverse order.
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        std::cout << kToolName << " " << kVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    }

    try {
        report::ReportBundle bundle = detail::make_bundle(args, opt.seed);
        if (app.got_subcommand(synth)) {
            detail::run_synth(opt);
            return 0;
        }
        if (app.got_subcommand(probe)) detail::run_probe(opt, bundle);
        else if (app.got_subcommand(mi)) detail::run_mi(opt, bundle);
        else if (app.got_subcommand(mig)) detail::run_mig(opt, bundle);
        else if (app.got_subcommand(dci)) detail::run_dci(opt, bundle);
        else if (app.got_subcommand(sap)) detail::run_sap(opt, bundle);
        else if (app.got_subcommand(alignment)) detail::run_alignment(opt, bundle);
        else if (app.got_subcommand(geometry)) detail::run_geometry(opt, bundle);
        else if (app.got_subcommand(gradients)) detail::run_gradients(opt, bundle);
        else if (app.got_subcommand(sweep)) detail::run_sweep(opt, bundle);
        else if (app.got_subcommand(recovery)) detail::run_recovery(opt, bundle);
        else if (app.got_subcommand(intervene)) detail::run_intervene(opt, bundle);
        else if (app.got_subcommand(ttest)) detail::run_ttest(opt, bundle);
        else if (app.got_subcommand(holm)) detail::run_holm(opt, bundle);
        else if (app.got_subcommand(factorial)) detail::run_factorial(opt, bundle);
        else if (app.got_subcommand(full)) detail::run_full_report(opt, bundle);
        detail::emit(bundle, opt.out_path, opt.format);
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    }
}

inline int run_main(int argc, char** argv) {
    std::vector<std::string> args;
    args.reserve(static_cast<std::size_t>(argc));
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

} // namespace latdiag::cli
