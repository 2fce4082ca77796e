#include "lrinfer/reports.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lrinfer/common.hpp"

namespace lrinfer {

OrderedJson json_number_or_token(double v) {
    if (std::isinf(v) && v < 0) return OrderedJson("-inf");
    return OrderedJson(v);
}

OrderedJson fit_config_json(const FitConfig& config) {
    OrderedJson j;
    j["kind"] = to_string(config.kind);
    j["seed"] = config.seed;
    j["epochs"] = config.epochs;
    j["min_epochs"] = config.min_epochs;
    j["learning_rate"] = config.learning_rate;
    j["clip_norm"] = config.clip_norm;
    j["patience"] = config.patience;
    j["val_fraction"] = config.val_fraction;
    j["hidden"] = config.hidden;
    j["batch_size"] = config.batch_size;
    j["jobs"] = config.jobs;
    j["w0_mode"] = to_string(config.w0_mode);
    j["w0_trainable"] = config.w0_trainable;
    j["w0_value"] = config.w0_value;
    j["w0_offset_stim"] = config.w0_offset_stim;
    j["psychometric_trials"] = config.psychometric_trials;
    return j;
}

OrderedJson fit_report(const FitResult& result, const FitConfig& config,
                       const std::string& dataset_path,
                       const std::string& dataset_sha256,
                       const std::string& model_sha256,
                       double wall_time_sec) {
    const FittedModel& m = result.model;
    OrderedJson j;
    j["version"] = 1;
    j["kind"] = to_string(m.kind);
    j["dataset"] = dataset_path;
    j["dataset_sha256"] = dataset_sha256;
    j["model_sha256"] = model_sha256;
    j["config"] = fit_config_json(config);
    j["n_train_animals"] = m.n_train_animals;
    j["n_val_animals"] = m.n_val_animals;
    j["n_train_trials"] = m.n_train_trials;
    j["n_val_trials"] = m.n_val_trials;
    j["epochs_run"] = m.epochs_run;
    j["best_epoch"] = m.best_epoch;
    j["final_train_nll"] = m.train_loss;
    j["final_val_nll"] = m.val_loss;
    j["train_curve"] = m.train_curve;
    j["val_curve"] = m.val_curve;
    j["warnings"] = result.warnings;
    j["wall_time_sec"] = wall_time_sec;
    return j;
}

OrderedJson eval_report(const CrossvalResult& result,
                        const std::string& protocol,
                        const std::vector<EvalModelRef>& refs,
                        const std::string& dataset_path,
                        const std::string& dataset_sha256,
                        const EvalSettings& settings) {
    if (refs.size() != result.models.size())
        throw ConfigError("eval report: one reference per model required");

    OrderedJson meta;
    meta["protocol"] = protocol;
    meta["dataset"] = dataset_path;
    meta["dataset_sha256"] = dataset_sha256;
    OrderedJson model_meta = OrderedJson::array();
    for (const EvalModelRef& r : refs) {
        OrderedJson e;
        e["path"] = r.path;
        e["sha256"] = r.sha256;
        e["kind"] = r.kind_name;
        model_meta.push_back(e);
    }
    meta["models"] = model_meta;
    meta["seeds"] = result.seeds;
    if (protocol == "animals") meta["folds"] = result.folds;
    if (protocol == "future") {
        meta["split_trial"] = settings.split_trial;
        meta["horizon"] = settings.horizon;
    }
    meta["degenerate_eval"] = result.degenerate_eval;

    OrderedJson models = OrderedJson::array();
    for (std::size_t i = 0; i < result.models.size(); ++i) {
        const ModelScore& ms = result.models[i];
        OrderedJson e;
        e["index"] = i;
        e["kind"] = refs[i].kind_name;
        e["path"] = refs[i].path;
        e["per_animal_ll"] = ms.per_animal_ll;
        e["trials_per_animal"] = ms.trials_per_animal;
        e["total_ll"] = ms.total_ll;
        e["total_ll_by_seed"] = ms.total_ll_by_seed;
        e["n_trials"] = ms.n_trials;
        e["per_trial_mean"] = ms.per_trial_mean;
        models.push_back(e);
    }

    OrderedJson tests = OrderedJson::array();
    for (const PairwiseTest& pt : result.tests) {
        OrderedJson e;
        e["model_a"] = pt.model_a;
        e["model_b"] = pt.model_b;
        e["t"] = json_number_or_token(pt.test.t);
        e["p"] = pt.test.p;
        e["df"] = pt.test.df;
        e["degenerate"] = pt.test.degenerate;
        tests.push_back(e);
    }

    OrderedJson j;
    j["version"] = 1;
    j["metadata"] = meta;
    j["models"] = models;
    j["pairwise_tests"] = tests;
    return j;
}

std::string render_eval_table(const CrossvalResult& result,
                              const std::vector<EvalModelRef>& refs) {
    std::ostringstream out;
    char buf[160];
    out << "model  kind                     total_ll      per_trial  "
           "n_trials\n";
    for (std::size_t i = 0; i < result.models.size(); ++i) {
        const ModelScore& ms = result.models[i];
        std::snprintf(buf, sizeof buf, "%-6zu %-22s %14.4f %14.6f %9ld\n", i,
                      refs[i].kind_name.c_str(), ms.total_ll,
                      ms.per_trial_mean, ms.n_trials);
        out << buf;
    }
    if (!result.tests.empty()) {
        out << "pair   t            p            df   degenerate\n";
        for (const PairwiseTest& pt : result.tests) {
            std::snprintf(buf, sizeof buf,
                          "%zu vs %zu %12.4f %12.6f %6.1f   %s\n",
                          static_cast<std::size_t>(pt.model_a),
                          static_cast<std::size_t>(pt.model_b), pt.test.t,
                          pt.test.p, pt.test.df,
                          pt.test.degenerate ? "yes" : "no");
            out << buf;
        }
    }
    return out.str();
}

void write_json_file(const std::string& path, const OrderedJson& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path + "' for writing");
    out << doc.dump(2) << '\n';
    if (!out) throw ConfigError("failed writing '" + path + "'");
}

}  // namespace lrinfer
