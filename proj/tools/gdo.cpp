// gdo: command-line front end.
//
// Exit codes: 0 ok, 1 error, 2 constraint violation / rejected input,
// 3 infeasible profile.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "gdo/gdo.hpp"

namespace fs = std::filesystem;
using namespace gdo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitViolation = 2;
constexpr int kExitInfeasible = 3;

#ifndef GDO_PROFILE_DIR
#define GDO_PROFILE_DIR ""
#endif

unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

/// A path to a profile file, or a preset name resolved against the shipped
/// profiles directory (GDO_PROFILE_DIR overrides the built-in location).
GoalProfile resolve_profile(const std::string& arg) {
    if (fs::exists(arg) && fs::is_regular_file(arg)) return load_profile(arg);
    auto name = parse_profile_name(arg);
    if (!name || *name == ProfileName::custom) throw ConfigError("unknown profile '" + arg + "'");
    std::string dir = GDO_PROFILE_DIR;
    if (const char* env = std::getenv("GDO_PROFILE_DIR")) dir = env;
    if (!dir.empty()) {
        const fs::path p = fs::path(dir) / (preset_file_stem(*name) + ".json");
        if (fs::exists(p)) return load_profile(p);
    }
    return preset(*name);
}

void print_diagnostics(const std::vector<Diagnostic>& diags) {
    for (const auto& d : diags) std::cerr << "row " << d.row << ": " << d.field << ": " << d.message << '\n';
}

Pool load_pool(const std::string& path, const StrataConfig& strata, bool strict) {
    auto res = ingest_pool(path, format_from_path(path), strata);
    if (!res.rejected.empty()) {
        print_diagnostics(res.rejected);
        if (strict) throw PoolError(std::to_string(res.rejected.size()) + " malformed row(s) in '" + path + "'");
        std::cerr << "warning: skipped " << res.rejected.size() << " malformed row(s)\n";
    }
    return std::move(res.pool);
}

void attach_table(Pool& pool, const std::string& path, const StrataConfig& strata) {
    const auto table = read_descriptor_table(path);
    if (!table.rejected.empty()) {
        print_diagnostics(table.rejected);
        throw PoolError("descriptor table '" + path + "' has " + std::to_string(table.rejected.size()) +
                        " invalid row(s)");
    }
    const auto missing = attach_descriptors(pool, table, strata);
    if (!missing.empty())
        std::cerr << "warning: " << missing.size() << " sample(s) have no descriptor row and are dropped\n";
}

nlohmann::json breakdown_json(const ScoreBreakdown& b) {
    return {{"q_text", b.q_text}, {"d", b.d},           {"a", b.a},
            {"t", b.t},           {"r_src", b.r_src},   {"b", b.b},
            {"z_vds3", b.z_vds3}, {"z_qual", b.z_qual}, {"base_part", b.base_part},
            {"vds3_part", b.vds3_part}, {"quality_part", b.quality_part}, {"rho", b.rho}};
}

struct CommonOpts {
    std::string pool;
    std::string descriptors;
    std::uint64_t seed = 17;
    unsigned workers = default_workers();
    std::string ablate;
    std::string media_root;
    double failure_threshold = 0.05;
    double temporal_threshold = 0.5;
};

void add_common(CLI::App* app, CommonOpts& o, bool with_pool = true) {
    if (with_pool) app->add_option("--pool", o.pool, "pool file (.jsonl or .tsv)")->required();
    app->add_option("--descriptors", o.descriptors, "descriptor table to attach instead of running the mock probe");
    app->add_option("--seed", o.seed, "seed");
    app->add_option("--workers", o.workers, "worker threads");
    app->add_option("--ablate", o.ablate, "score terms to remove: vds,ppl,sc");
    app->add_option("--media-root", o.media_root, "directory for relative *.frames.json media refs");
    app->add_option("--max-failure-fraction", o.failure_threshold, "extraction failure threshold");
    app->add_option("--temporal-threshold", o.temporal_threshold, "m_tnc cut for temporal-positive");
}

PipelineConfig pipeline_config(const CommonOpts& o) {
    PipelineConfig cfg;
    cfg.extraction.seed = o.seed;
    cfg.extraction.workers = o.workers;
    cfg.extraction.max_failure_fraction = o.failure_threshold;
    cfg.extraction.strata.temporal_threshold = o.temporal_threshold;
    cfg.frames.media_root = o.media_root;
    cfg.ablation = Ablation::parse(o.ablate);
    return cfg;
}

/// Loads the pool, attaches or extracts descriptors, and scores it.
ScoredPool scored_pool(const CommonOpts& o) {
    const auto cfg = pipeline_config(o);
    Pool pool = load_pool(o.pool, cfg.extraction.strata, false);
    if (!o.descriptors.empty()) {
        attach_table(pool, o.descriptors, cfg.extraction.strata);
        pool = drop_undescribed(pool);
    }
    auto prepared = prepare_pool(pool, cfg);
    for (const auto& f : prepared.failures) std::cerr << "extraction failed for '" << f.id << "': " << f.message << '\n';
    return score_prepared(prepared.pool, cfg);
}

int run_check(const std::string& path) {
    auto res = ingest_pool(path, format_from_path(path));
    print_diagnostics(res.rejected);
    std::size_t videos = 0;
    for (const auto& r : res.pool) videos += r.is_video();
    std::cout << "records " << res.pool.size() << "  videos " << videos << "  images " << res.pool.size() - videos
              << "  rejected " << res.rejected.size() << '\n';
    return res.rejected.empty() ? kExitOk : kExitViolation;
}

int run_check_descriptors(const std::string& path) {
    const auto t = read_descriptor_table(path);
    print_diagnostics(t.rejected);
    if (t.rows.empty() && t.errors.empty() && t.rejected.empty()) std::cerr << "warning: descriptor table has no rows\n";
    std::cout << "rows " << t.rows.size() << "  errors " << t.errors.size() << "  rejected " << t.rejected.size()
              << '\n';
    std::cout << (t.rejected.empty() ? "PASS" : "FAIL") << '\n';
    return t.rejected.empty() ? kExitOk : kExitViolation;
}

int run_extract(const CommonOpts& o, const std::string& probe, const std::string& out) {
    const auto cfg = pipeline_config(o);
    Pool pool = load_pool(o.pool, cfg.extraction.strata, false);
    std::ofstream os(out);
    if (!os) throw Error("cannot write '" + out + "'");
    if (probe == "external") {
        if (o.descriptors.empty()) throw ConfigError("--probe external needs --descriptors");
        const auto table = read_descriptor_table(o.descriptors);
        if (!table.rejected.empty()) {
            print_diagnostics(table.rejected);
            return kExitViolation;
        }
        attach_descriptors(pool, table, cfg.extraction.strata);
        write_descriptor_table(pool, table.errors, os);
        std::cout << "attached " << table.rows.size() << " descriptor rows\n";
        return kExitOk;
    }
    auto prepared = prepare_pool(pool, cfg);
    std::vector<SampleRecord> all(pool.begin(), pool.end());
    for (auto& r : all)
        if (auto i = prepared.pool.find(r.id)) r.descriptors = prepared.pool[*i].descriptors;
    write_descriptor_table(Pool(std::move(all)), prepared.failures, os);
    std::cout << "extracted " << prepared.pool.size() << " of " << pool.size() << " samples, "
              << prepared.failures.size() << " failed\n";
    return kExitOk;
}

int run_score(const CommonOpts& o, const std::string& out, const std::string& stats_out) {
    const auto scored = scored_pool(o);
    std::ofstream os(out);
    if (!os) throw Error("cannot write '" + out + "'");
    for (std::size_t i = 0; i < scored.pool.size(); ++i) {
        auto j = record_to_json(scored.pool[i], true);
        j["breakdown"] = breakdown_json(scored.breakdowns[i]);
        os << j.dump() << '\n';
    }
    if (!stats_out.empty()) {
        std::ofstream ss(stats_out);
        ss << scored.context.stats.to_json().dump(2) << '\n';
    }
    std::cout << "scored " << scored.pool.size() << " samples, stats " << scored.context.stats.id() << '\n';
    return kExitOk;
}

int run_build(const CommonOpts& o, const std::string& profile_arg, const std::string& out, bool no_tail) {
    GoalProfile profile = resolve_profile(profile_arg);
    profile.seed = o.seed;
    const auto scored = scored_pool(o);
    BuildOptions opts;
    opts.strata.temporal_threshold = o.temporal_threshold;
    opts.workers = o.workers;
    opts.run_score_tail = !no_tail;
    opts.stats_id = scored.context.stats.id();
    auto m = build_subset(scored.pool, profile, opts);
    m.ablation = Ablation::parse(o.ablate).to_string();
    write_manifest(m, fs::path(out));
    const auto& a = m.audit;
    std::cout << "selected " << a.selected << " of " << a.eligible << " eligible  video_ratio " << a.video_ratio
              << "  temporal_ratio " << a.temporal_ratio << "  vds_positive " << a.vds_positive << '\n';
    for (const auto& r : a.relaxations) std::cerr << "note: " << r << '\n';
    return kExitOk;
}

int run_control(const CommonOpts& o, std::optional<std::int64_t> size, const std::string& profile_arg,
                const std::string& out) {
    if (!size) {
        if (profile_arg.empty()) throw ConfigError("control needs --size or --profile");
        size = 10 * resolve_profile(profile_arg).budget;
    }
    const Pool pool = load_pool(o.pool, {}, false);
    const auto m = draw_uniform_control(pool, *size, o.seed);
    write_manifest(m, fs::path(out));
    std::cout << "drew " << m.audit.selected << " of " << pool.size() << (m.audit.budget_shortfall ? " (saturated)" : "")
              << '\n';
    return kExitOk;
}

/// Pool for checking a manifest: scored the same way the manifest was built.
Pool pool_for_manifest(CommonOpts o, const SubsetManifest& m) {
    if (m.kind == "uniform_control") return load_pool(o.pool, {}, false);
    o.seed = m.seed;
    if (o.ablate.empty()) o.ablate = m.ablation;
    return scored_pool(o).pool;
}

int run_verify(const CommonOpts& o, const std::string& manifest_path, const std::string& profile_arg) {
    const auto m = read_manifest(fs::path(manifest_path));
    GoalProfile profile = profile_arg.empty() ? profile_from_json(m.profile) : resolve_profile(profile_arg);
    const Pool pool = pool_for_manifest(o, m);
    VerifyConfig vc;
    vc.temporal_threshold = o.temporal_threshold;
    const auto rep = verify_manifest(m, pool, profile, vc);
    std::cout << rep.render();
    return rep.ok() ? kExitOk : kExitViolation;
}

int run_report(const CommonOpts& o, const std::string& manifest_path, const std::string& out_dir) {
    const auto m = read_manifest(fs::path(manifest_path));
    const Pool pool = pool_for_manifest(o, m);
    VerifyConfig vc;
    vc.temporal_threshold = o.temporal_threshold;
    const auto rep = composition_report(m, pool, vc);
    std::cout << rep.text;
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        std::ofstream(fs::path(out_dir) / "composition.txt") << rep.text;
        std::ofstream(fs::path(out_dir) / "score_vs_rank.csv") << rep.score_rank_csv;
        std::ofstream(fs::path(out_dir) / "ratio_vs_stage.csv") << rep.stage_ratio_csv;
    }
    return rep.red_flags ? kExitViolation : kExitOk;
}

std::map<std::string, double> parse_scores(const std::vector<std::string>& kv) {
    std::map<std::string, double> out;
    for (const auto& s : kv) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("expected benchmark=score, got '" + s + "'");
        out[s.substr(0, eq)] = std::stod(s.substr(eq + 1));
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"profile-constrained subset construction for multimodal instruction pools"};
    app.require_subcommand(1);

    CommonOpts common;
    std::string out, probe = "mock", profile_arg, manifest, out_dir, stats_out, trajectory, benchmark = "benchmark";
    std::optional<std::int64_t> size;
    std::int64_t budget = kUniformBaselineBudget;
    double reference = 0.0;
    bool no_tail = false;
    std::vector<std::string> gdo_scores, baseline_scores;

    auto* check = app.add_subcommand("check", "validate a pool file");
    check->add_option("--pool", common.pool)->required();

    auto* check_desc = app.add_subcommand("check-descriptors", "validate a descriptor table");
    check_desc->add_option("--table", common.descriptors)->required();

    auto* extract = app.add_subcommand("extract", "compute descriptors");
    add_common(extract, common);
    extract->add_option("--probe", probe, "mock or external")->check(CLI::IsMember({"mock", "external"}));
    extract->add_option("--out", out)->required();

    auto* score = app.add_subcommand("score", "score a pool");
    add_common(score, common);
    score->add_option("--out", out)->required();
    score->add_option("--stats-out", stats_out, "write normalization stats");

    auto* build = app.add_subcommand("build", "build a 1x subset manifest");
    add_common(build, common);
    build->add_option("--profile", profile_arg, "preset name or profile file")->required();
    build->add_option("--out", out)->required();
    build->add_flag("--no-tail", no_tail, "stop after the constraint stages");

    auto* control = app.add_subcommand("control", "draw a uniform control manifest");
    add_common(control, common);
    control->add_option("--size", size);
    control->add_option("--profile", profile_arg, "use 10 x N_g of this profile");
    control->add_option("--out", out)->required();

    auto* verify = app.add_subcommand("verify", "check a manifest against a pool and profile");
    add_common(verify, common);
    verify->add_option("--manifest", manifest)->required();
    verify->add_option("--profile", profile_arg, "defaults to the manifest's snapshot");

    auto* report = app.add_subcommand("report", "composition report for a manifest");
    add_common(report, common);
    report->add_option("--manifest", manifest)->required();
    report->add_option("--out-dir", out_dir, "also write text and CSV files here");

    auto* eff = app.add_subcommand("efficiency", "peak match and reduction from a trajectory");
    eff->add_option("--trajectory", trajectory, "CSV samples_seen,accuracy")->required();
    eff->add_option("--reference", reference, "baseline reference accuracy")->required();
    eff->add_option("--budget", budget, "baseline sample budget");
    eff->add_option("--benchmark", benchmark);

    auto* delta = app.add_subcommand("delta", "per-benchmark delta table");
    delta->add_option("--gdo", gdo_scores, "benchmark=score")->required();
    delta->add_option("--baseline", baseline_scores, "benchmark=score")->required();

    auto* prof = app.add_subcommand("profile", "print a resolved profile");
    prof->add_option("name", profile_arg)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitError;
    }

    try {
        if (*check) return run_check(common.pool);
        if (*check_desc) return run_check_descriptors(common.descriptors);
        if (*extract) return run_extract(common, probe, out);
        if (*score) return run_score(common, out, stats_out);
        if (*build) return run_build(common, profile_arg, out, no_tail);
        if (*control) return run_control(common, size, profile_arg, out);
        if (*verify) return run_verify(common, manifest, profile_arg);
        if (*report) return run_report(common, manifest, out_dir);
        if (*eff) {
            std::cout << render_efficiency(benchmark, peak_match(read_trajectory(fs::path(trajectory)), reference, budget));
            return kExitOk;
        }
        if (*delta) {
            std::cout << render_delta_table(delta_table(parse_scores(gdo_scores), parse_scores(baseline_scores)));
            return kExitOk;
        }
        if (*prof) {
            std::cout << profile_to_json(resolve_profile(profile_arg)).dump(2) << '\n';
            return kExitOk;
        }
    } catch (const InfeasibleError& e) {
        std::cerr << "gdo: " << e.what() << '\n';
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "gdo: " << e.what() << '\n';
        return kExitError;
    }
    return kExitError;
}
