// Command-line surface: simulate -> fit -> eval -> analyze pipelines over
// the CSV/JSON/binary formats documented in docs/formats.md.
//
// Exit codes: 0 ok, 2 config error / malformed input, 3 invalid data,
// 4 numerical abort.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lrinfer/analysis.hpp"
#include "lrinfer/common.hpp"
#include "lrinfer/dataset_io.hpp"
#include "lrinfer/fit.hpp"
#include "lrinfer/model_io.hpp"
#include "lrinfer/reports.hpp"
#include "lrinfer/run_config.hpp"
#include "lrinfer/simulate.hpp"

namespace {

using namespace lrinfer;

RunConfig config_or_default(const std::string& path) {
    if (path.empty()) {
        RunConfig rc;
        return rc;
    }
    return load_run_config(path);
}

std::string join_rule_names(const std::vector<RuleComponent>& rules) {
    std::string out;
    for (const RuleComponent& rc : rules) {
        if (!out.empty()) out += '+';
        out += to_string(rc.rule.kind);
    }
    return out;
}

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    int jobs = 1;
};

void add_common(CLI::App* sub, CommonFlags& flags, bool with_jobs = true) {
    sub->add_option("--config", flags.config_path,
                    "JSON run configuration (version 1)");
    sub->add_option("--seed", flags.seed,
                    "Override the configuration's seed");
    if (with_jobs)
        sub->add_option("--jobs", flags.jobs, "Worker threads")
            ->check(CLI::PositiveNumber);
}

// ---------------------------------------------------------------------- //

int run_simulate(const CommonFlags& flags, const std::string& out_dir) {
    RunConfig rc = config_or_default(flags.config_path);
    if (flags.seed) rc.sim.master_seed = *flags.seed;
    validate(rc.sim);

    const auto pool = simulate_pool_parallel(rc.sim, flags.jobs);

    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const std::string data_path = (fs::path(out_dir) / "dataset.csv").string();
    const std::string latents_path =
        (fs::path(out_dir) / "latents.csv").string();
    write_dataset_csv(data_path, pool);
    write_latents_csv(latents_path, pool);

    std::printf("simulated n_animals=%d n_trials=%d rule=%s seed=%llu -> %s\n",
                rc.sim.n_animals, rc.sim.n_trials,
                join_rule_names(rc.sim.rules).c_str(),
                static_cast<unsigned long long>(rc.sim.master_seed),
                data_path.c_str());
    return EXIT_OK;
}

int run_calibrate(const CommonFlags& flags, double target, double tol,
                  int pilots) {
    RunConfig rc = config_or_default(flags.config_path);
    if (flags.seed) rc.sim.master_seed = *flags.seed;
    validate(rc.sim);
    const double alpha = calibrate_alpha(rc.sim, target, tol, pilots);
    std::printf("calibrated alpha=%s target=%s pilots=%d\n",
                format_double(alpha).c_str(), format_double(target).c_str(),
                pilots);
    return EXIT_OK;
}

int run_fit(const CommonFlags& flags, const std::string& data_path,
            const std::string& kind_name, const std::string& model_path,
            const std::string& report_path) {
    RunConfig rc = config_or_default(flags.config_path);
    FitConfig fc = rc.fit;
    if (!kind_name.empty()) {
        fc.kind = model_kind_from_string(kind_name);
    } else if (!rc.fit_has_kind) {
        throw ConfigError("no model kind: pass --kind or set fit.kind");
    }
    if (flags.seed) fc.seed = *flags.seed;
    if (flags.jobs > 1) fc.jobs = flags.jobs;
    validate(fc);

    const auto pool = load_dataset_csv(data_path);

    const auto t0 = std::chrono::steady_clock::now();
    const FitResult result = fit(pool, fc);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();

    save_model(model_path, result.model);
    const std::string model_sha = model_content_hash(result.model);
    if (!report_path.empty()) {
        write_json_file(report_path,
                        fit_report(result, fc, data_path,
                                   sha256_file(data_path), model_sha, wall));
    }
    for (const std::string& w : result.warnings)
        std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::printf(
        "fit kind=%s epochs_run=%d best_epoch=%d train_nll=%s val_nll=%s "
        "model_sha256=%s -> %s\n",
        to_string(result.model.kind), result.model.epochs_run,
        result.model.best_epoch, format_double(result.model.train_loss).c_str(),
        format_double(result.model.val_loss).c_str(), model_sha.c_str(),
        model_path.c_str());
    return EXIT_OK;
}

CrossvalResult holdout_scores(const std::vector<FittedModel>& models,
                              const std::vector<Session>& pool,
                              bool chance_baseline, int jobs) {
    CrossvalResult result;
    for (const FittedModel& m : models) {
        const LlReport rep = heldout_log_likelihood(m, pool, jobs);
        ModelScore ms;
        ms.kind = m.kind;
        ms.per_animal_ll = rep.per_animal;
        ms.trials_per_animal = rep.trials_per_animal;
        ms.total_ll = rep.total;
        ms.total_ll_by_seed = rep.total;
        ms.n_trials = rep.n_trials;
        ms.per_trial_mean = rep.per_trial_mean;
        result.models.push_back(std::move(ms));
    }
    if (chance_baseline) {
        ModelScore ms;
        for (const Session& s : pool) {
            const long n = static_cast<long>(s.trials.size());
            ms.per_animal_ll[s.animal_id] = chance_log_likelihood(n);
            ms.trials_per_animal[s.animal_id] = n;
            ms.n_trials += n;
        }
        // Closed form so the reported total is exact, not a rounded sum.
        ms.total_ll = chance_log_likelihood(ms.n_trials);
        ms.total_ll_by_seed = ms.total_ll;
        ms.per_trial_mean =
            ms.n_trials > 0 ? ms.total_ll / static_cast<double>(ms.n_trials)
                            : 0.0;
        result.models.push_back(std::move(ms));
    }
    for (std::size_t a = 0; a < result.models.size(); ++a) {
        for (std::size_t b = a + 1; b < result.models.size(); ++b) {
            std::vector<double> va, vb;
            for (const Session& s : pool) {
                va.push_back(result.models[a].per_animal_ll.at(s.animal_id));
                vb.push_back(result.models[b].per_animal_ll.at(s.animal_id));
            }
            PairwiseTest pt;
            pt.model_a = static_cast<int>(a);
            pt.model_b = static_cast<int>(b);
            pt.test = pool.size() >= 2
                          ? paired_ttest(va, vb)
                          : TTestResult{0.0, 1.0, 0.0, true};
            result.tests.push_back(pt);
        }
    }
    return result;
}

int run_eval(const CommonFlags& flags, const std::string& data_path,
             const std::vector<std::string>& model_paths,
             const std::string& protocol_flag, const std::string& out_path,
             std::optional<int> folds_flag,
             const std::vector<std::uint64_t>& seeds_flag,
             std::optional<int> split_flag, std::optional<int> horizon_flag,
             bool chance_flag) {
    RunConfig rc = config_or_default(flags.config_path);
    EvalSettings ev = rc.eval;
    if (!protocol_flag.empty()) ev.protocol = protocol_flag;
    if (ev.protocol != "holdout" && ev.protocol != "animals" &&
        ev.protocol != "future")
        throw ConfigError("protocol must be holdout, animals or future");
    if (folds_flag) ev.folds = *folds_flag;
    if (!seeds_flag.empty()) ev.seeds = seeds_flag;
    if (split_flag) ev.split_trial = *split_flag;
    if (horizon_flag) ev.horizon = *horizon_flag;
    if (chance_flag) ev.chance_baseline = true;
    // --seed rebases the refit-seed list deterministically.
    if (flags.seed && seeds_flag.empty()) {
        for (std::size_t i = 0; i < ev.seeds.size(); ++i)
            ev.seeds[i] = *flags.seed + i;
    }

    const auto pool = load_dataset_csv(data_path);
    std::vector<FittedModel> models;
    std::vector<EvalModelRef> refs;
    for (const std::string& p : model_paths) {
        models.push_back(load_model(p));
        refs.push_back({p, model_content_hash(models.back()),
                        to_string(models.back().kind)});
    }
    if (models.empty()) throw ConfigError("eval requires at least one --model");

    CrossvalResult result;
    if (ev.protocol == "holdout") {
        result = holdout_scores(models, pool, ev.chance_baseline, flags.jobs);
        if (ev.chance_baseline) refs.push_back({"", "", "chance"});
    } else {
        if (ev.chance_baseline)
            throw ConfigError(
                "the chance baseline applies to the holdout protocol only");
        CrossvalConfig cv;
        cv.folds = ev.folds;
        cv.seeds = ev.seeds;
        cv.fit = rc.fit;
        cv.jobs = flags.jobs;
        std::vector<ModelKind> kinds;
        int hidden = 0;
        for (const FittedModel& m : models) {
            kinds.push_back(m.kind);
            if (!uses_network(m.kind)) continue;
            if (hidden == 0) hidden = m.hidden;
             else if (hidden != m.hidden)
                throw ConfigError(
                    "refit protocols need one hidden size across models");
        }
        if (hidden > 0) cv.fit.hidden = hidden;
        if (ev.protocol == "animals") {
            result = crossval_animals(pool, kinds, cv);
        } else {
            result =
                crossval_future(pool, kinds, ev.split_trial, ev.horizon, cv);
        }
    }

    const OrderedJson report = eval_report(result, ev.protocol, refs,
                                           data_path, sha256_file(data_path),
                                           ev);
    std::fputs(render_eval_table(result, refs).c_str(), stdout);
    if (!out_path.empty()) {
        write_json_file(out_path, report);
        std::printf("report -> %s\n", out_path.c_str());
    } else {
        std::printf("%s\n", report.dump(2).c_str());
    }
    return EXIT_OK;
}

int run_slices(const CommonFlags& flags, const std::string& model_path,
               const std::string& out_path) {
    RunConfig rc = config_or_default(flags.config_path);
    const FittedModel model = load_model(model_path);

    SliceGrid grid = default_slice_grid();
    if (!rc.slices.stimuli.empty()) grid.stimuli = rc.slices.stimuli;
    if (!rc.slices.w_stim_levels.empty())
        grid.w_stim_levels = rc.slices.w_stim_levels;
    grid.bias_weight = rc.slices.bias_weight;
    grid.history_samples = rc.slices.history_samples;
    grid.history_length = rc.slices.history_length;
    grid.seed = flags.seed ? *flags.seed : rc.master_seed;

    const auto rows = update_slices(model, grid);
    write_slices_csv(out_path, rows);
    std::printf("slices kind=%s rows=%zu -> %s\n", to_string(model.kind),
                rows.size(), out_path.c_str());
    return EXIT_OK;
}

int run_historygap(const CommonFlags& flags, const std::string& model_path,
                   const std::string& out_path) {
    RunConfig rc = config_or_default(flags.config_path);
    const FittedModel model = load_model(model_path);
    if (!is_recurrent(model.kind) && model.kind != ModelKind::DNNGLM_HISTORY)
        throw ConfigError("history gap requires a model with trial-history "
                          "dependence; '" +
                          std::string(to_string(model.kind)) +
                          "' is Markovian");

    const Vec stimuli = stimulus_grid(false);
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + out_path + "' for writing");
    out << "k,offset,stimulus,gap\n";
    std::size_t rows = 0;
    for (int k : rc.gap.ks) {
        for (int offset : rc.gap.offsets) {
            HistoryCondition cond;
            cond.k = k;
            cond.offset = offset;
            cond.burn_in = rc.gap.burn_in;
            cond.draws = rc.gap.draws;
            cond.seed = flags.seed ? *flags.seed : rc.master_seed;
            cond.w_stim = rc.gap.w_stim;
            cond.w_bias = rc.gap.w_bias;
            for (const GapPoint& g : history_gap(model, cond, stimuli)) {
                out << k << ',' << offset << ','
                    << format_double(g.stimulus) << ','
                    << format_double(g.gap) << '\n';
                ++rows;
            }
        }
    }
    if (!out) throw ConfigError("failed writing '" + out_path + "'");
    std::printf("historygap kind=%s rows=%zu -> %s\n", to_string(model.kind),
                rows, out_path.c_str());
    return EXIT_OK;
}

int run_slicediff(const std::string& a_path, const std::string& b_path) {
    const auto a = load_slices_csv(a_path);
    const auto b = load_slices_csv(b_path);
    const double rmse = slice_table_rmse(a, b);
    const double lg = log10_or_neg_inf(rmse);
    std::printf("rmse=%s log10_rmse=%s\n", format_double(rmse).c_str(),
                std::isinf(lg) ? "-inf" : format_double(lg).c_str());
    return EXIT_OK;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Trial-by-trial learning-rule inference: simulate behavior, fit "
        "update-rule models, evaluate and analyze them."};
    app.require_subcommand(1);

    // simulate
    CommonFlags sim_flags;
    std::string sim_out_dir;
    CLI::App* sim = app.add_subcommand(
        "simulate", "Simulate a pool of learning animals to CSV");
    add_common(sim, sim_flags);
    sim->add_option("--out-dir", sim_out_dir, "Output directory")->required();

    // calibrate
    CommonFlags cal_flags;
    double cal_target = 3.0, cal_tol = 0.1;
    int cal_pilots = 20;
    CLI::App* cal = app.add_subcommand(
        "calibrate",
        "Bisect the rule's learning rate to a target terminal weight");
    add_common(cal, cal_flags, /*with_jobs=*/false);
    cal->add_option("--target", cal_target, "Median terminal stimulus weight");
    cal->add_option("--tol", cal_tol, "Calibration tolerance");
    cal->add_option("--pilots", cal_pilots, "Pilot animals per probe");

    // fit
    CommonFlags fit_flags;
    std::string fit_data, fit_kind, fit_model_out, fit_report_out;
    CLI::App* fit_cmd =
        app.add_subcommand("fit", "Fit an update-rule model to a dataset");
    add_common(fit_cmd, fit_flags);
    fit_cmd->add_option("--data", fit_data, "Dataset CSV")->required();
    fit_cmd->add_option("--kind", fit_kind,
                        "Model kind (overrides the configuration)");
    fit_cmd->add_option("--out", fit_model_out, "Model file to write")
        ->required();
    fit_cmd->add_option("--report", fit_report_out, "Fit report JSON");

    // eval
    CommonFlags eval_flags;
    std::string eval_data, eval_protocol, eval_out;
    std::vector<std::string> eval_models;
    std::optional<int> eval_folds, eval_split, eval_horizon;
    std::vector<std::uint64_t> eval_seeds;
    bool eval_chance = false;
    CLI::App* eval_cmd = app.add_subcommand(
        "eval", "Score models: held-out LL, animal folds, or future windows");
    add_common(eval_cmd, eval_flags);
    eval_cmd->add_option("--data", eval_data, "Dataset CSV")->required();
    eval_cmd->add_option("--model", eval_models, "Model file (repeatable)")
        ->required();
    eval_cmd->add_option("--protocol", eval_protocol,
                         "holdout | animals | future");
    eval_cmd->add_option("--out", eval_out, "Evaluation report JSON");
    eval_cmd->add_option("--folds", eval_folds, "Folds (animals protocol)");
    eval_cmd
        ->add_option("--seeds", eval_seeds,
                     "Comma-separated refit seeds (animals/future)")
        ->delimiter(',');
    eval_cmd->add_option("--split", eval_split,
                         "First evaluated trial (future protocol)");
    eval_cmd->add_option("--horizon", eval_horizon,
                         "Evaluated trials per animal (future protocol)");
    eval_cmd->add_flag("--chance", eval_chance,
                       "Add the exact chance baseline (holdout)");

    // slices
    CommonFlags slices_flags;
    std::string slices_model, slices_out;
    CLI::App* slices_cmd = app.add_subcommand(
        "slices", "Tabulate the model's update on a (stimulus, weight) grid");
    add_common(slices_cmd, slices_flags, /*with_jobs=*/false);
    slices_cmd->add_option("--model", slices_model, "Model file")->required();
    slices_cmd->add_option("--out", slices_out, "Slice CSV to write")
        ->required();

    // historygap
    CommonFlags gap_flags;
    std::string gap_model, gap_out;
    CLI::App* gap_cmd = app.add_subcommand(
        "historygap",
        "Reward-history conditioned update gaps of a recurrent model");
    add_common(gap_cmd, gap_flags, /*with_jobs=*/false);
    gap_cmd->add_option("--model", gap_model, "Model file")->required();
    gap_cmd->add_option("--out", gap_out, "Gap CSV to write")->required();

    // slicediff
    std::string diff_a, diff_b;
    CLI::App* diff_cmd = app.add_subcommand(
        "slicediff", "Root-mean-square difference of two slice tables");
    diff_cmd->add_option("--a", diff_a, "First slice CSV")->required();
    diff_cmd->add_option("--b", diff_b, "Second slice CSV")->required();

    sim->callback([&] { run_simulate(sim_flags, sim_out_dir); });
    cal->callback(
        [&] { run_calibrate(cal_flags, cal_target, cal_tol, cal_pilots); });
    fit_cmd->callback([&] {
        run_fit(fit_flags, fit_data, fit_kind, fit_model_out, fit_report_out);
    });
    eval_cmd->callback([&] {
        run_eval(eval_flags, eval_data, eval_models, eval_protocol, eval_out,
                 eval_folds, eval_seeds, eval_split, eval_horizon,
                 eval_chance);
    });
    slices_cmd->callback(
        [&] { run_slices(slices_flags, slices_model, slices_out); });
    gap_cmd->callback([&] { run_historygap(gap_flags, gap_model, gap_out); });
    diff_cmd->callback([&] { run_slicediff(diff_a, diff_b); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? EXIT_OK : EXIT_CONFIG_ERROR;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return EXIT_CONFIG_ERROR;
    } catch (const DataError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return EXIT_DATA_ERROR;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return EXIT_NUMERIC_ERROR;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return EXIT_NUMERIC_ERROR;
    }
    return EXIT_OK;
}
