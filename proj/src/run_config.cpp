#include "lrinfer/run_config.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include <json.hpp>

#include "lrinfer/common.hpp"

namespace lrinfer {

using json = nlohmann::json;

const char* to_string(RuleKind kind) {
    switch (kind) {
        case RuleKind::Reinforce: return "reinforce";
        case RuleKind::MaxLikelihood: return "max_likelihood";
        case RuleKind::EtraceReinforce: return "etrace";
    }
    throw ConfigError("unknown rule kind");
}

RuleKind rule_kind_from_string(const std::string& name) {
    if (name == "reinforce") return RuleKind::Reinforce;
    if (name == "max_likelihood") return RuleKind::MaxLikelihood;
    if (name == "etrace") return RuleKind::EtraceReinforce;
    throw ConfigError("unknown rule kind '" + name + "'");
}

namespace {

[[noreturn]] void fail(const std::string& origin, const std::string& what) {
    throw ConfigError(origin + ": " + what);
}

void check_keys(const json& obj, const std::string& origin,
                const std::string& where,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) fail(origin, "unknown key '" + where + key + "'");
    }
}

template <typename T>
T get_as(const json& obj, const std::string& origin, const std::string& where,
         const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        fail(origin, "key '" + where + key + "' has the wrong type");
    }
}

template <typename T>
std::vector<T> get_array(const json& obj, const std::string& origin,
                         const std::string& where, const char* key,
                         std::vector<T> fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<std::vector<T>>();
    } catch (const json::exception&) {
        fail(origin, "key '" + where + key + "' must be an array");
    }
}

SimConfig parse_sim(const json& obj, const std::string& origin,
                    std::uint64_t master_seed) {
    const std::string where = "simulate.";
    check_keys(obj, origin, where,
               {"n_animals", "n_trials", "include_zero_stimulus", "w0_stim",
                "w0_stim_uniform", "bias_set", "learn_bias",
                "noise_sigma_frac", "rules"});
    SimConfig sim;
    sim.master_seed = master_seed;
    sim.n_animals = get_as<int>(obj, origin, where, "n_animals", sim.n_animals);
    sim.n_trials = get_as<int>(obj, origin, where, "n_trials", sim.n_trials);
    sim.include_zero_stimulus = get_as<bool>(
        obj, origin, where, "include_zero_stimulus", sim.include_zero_stimulus);
    sim.w0_stim = get_as<double>(obj, origin, where, "w0_stim", sim.w0_stim);
    sim.w0_stim_uniform = get_as<bool>(obj, origin, where, "w0_stim_uniform",
                                       sim.w0_stim_uniform);
    sim.bias_set =
        get_array<double>(obj, origin, where, "bias_set", sim.bias_set);
    sim.learn_bias =
        get_as<bool>(obj, origin, where, "learn_bias", sim.learn_bias);
    sim.noise_sigma_frac = get_as<double>(obj, origin, where,
                                          "noise_sigma_frac",
                                          sim.noise_sigma_frac);
    if (obj.contains("rules")) {
        if (!obj.at("rules").is_array() || obj.at("rules").empty())
            fail(origin, "simulate.rules must be a non-empty array");
        sim.rules.clear();
        std::size_t i = 0;
        for (const json& r : obj.at("rules")) {
            const std::string rw =
                where + "rules[" + std::to_string(i) + "].";
            if (!r.is_object()) fail(origin, rw + " must be an object");
            check_keys(r, origin, rw,
                       {"kind", "alpha", "etrace_window", "weight"});
            RuleComponent comp;
            comp.rule.kind = rule_kind_from_string(
                get_as<std::string>(r, origin, rw, "kind", "reinforce"));
            comp.rule.alpha =
                get_as<double>(r, origin, rw, "alpha", comp.rule.alpha);
            comp.rule.etrace_window = get_as<int>(r, origin, rw,
                                                  "etrace_window",
                                                  comp.rule.etrace_window);
            comp.weight = get_as<double>(r, origin, rw, "weight", 1.0);
            sim.rules.push_back(comp);
            ++i;
        }
    }
    return sim;
}

void parse_fit(const json& obj, const std::string& origin,
               std::uint64_t master_seed, RunConfig& rc) {
    const std::string where = "fit.";
    check_keys(obj, origin, where,
               {"kind", "seed", "epochs", "min_epochs", "learning_rate",
                "clip_norm", "patience", "val_fraction", "hidden",
                "batch_size", "jobs", "w0_mode", "w0_trainable", "w0_value",
                "w0_offset_stim", "psychometric_trials"});
    FitConfig& fc = rc.fit;
    if (obj.contains("kind")) {
        fc.kind = model_kind_from_string(
            get_as<std::string>(obj, origin, where, "kind", ""));
        rc.fit_has_kind = true;
    }
    fc.seed = get_as<std::uint64_t>(obj, origin, where, "seed", master_seed);
    fc.epochs = get_as<int>(obj, origin, where, "epochs", fc.epochs);
    fc.min_epochs =
        get_as<int>(obj, origin, where, "min_epochs", fc.min_epochs);
    fc.learning_rate = get_as<double>(obj, origin, where, "learning_rate",
                                      fc.learning_rate);
    fc.clip_norm =
        get_as<double>(obj, origin, where, "clip_norm", fc.clip_norm);
    fc.patience = get_as<int>(obj, origin, where, "patience", fc.patience);
    fc.val_fraction = get_as<double>(obj, origin, where, "val_fraction",
                                     fc.val_fraction);
    fc.hidden = get_as<int>(obj, origin, where, "hidden", fc.hidden);
    fc.batch_size =
        get_as<int>(obj, origin, where, "batch_size", fc.batch_size);
    fc.jobs = get_as<int>(obj, origin, where, "jobs", fc.jobs);
    if (obj.contains("w0_mode"))
        fc.w0_mode = w0_mode_from_string(
            get_as<std::string>(obj, origin, where, "w0_mode", ""));
    fc.w0_trainable =
        get_as<bool>(obj, origin, where, "w0_trainable", fc.w0_trainable);
    fc.w0_value =
        get_array<double>(obj, origin, where, "w0_value", fc.w0_value);
    fc.w0_offset_stim = get_as<double>(obj, origin, where, "w0_offset_stim",
                                       fc.w0_offset_stim);
    fc.psychometric_trials = get_as<int>(obj, origin, where,
                                         "psychometric_trials",
                                         fc.psychometric_trials);
}

EvalSettings parse_eval(const json& obj, const std::string& origin) {
    const std::string where = "eval.";
    check_keys(obj, origin, where,
               {"protocol", "folds", "seeds", "split_trial", "horizon",
                "chance_baseline"});
    EvalSettings ev;
    ev.protocol =
        get_as<std::string>(obj, origin, where, "protocol", ev.protocol);
    if (ev.protocol != "holdout" && ev.protocol != "animals" &&
        ev.protocol != "future")
        fail(origin, "eval.protocol must be holdout, animals or future");
    ev.folds = get_as<int>(obj, origin, where, "folds", ev.folds);
    ev.seeds =
        get_array<std::uint64_t>(obj, origin, where, "seeds", ev.seeds);
    ev.split_trial =
        get_as<int>(obj, origin, where, "split_trial", ev.split_trial);
    ev.horizon = get_as<int>(obj, origin, where, "horizon", ev.horizon);
    ev.chance_baseline = get_as<bool>(obj, origin, where, "chance_baseline",
                                      ev.chance_baseline);
    return ev;
}

SliceSettings parse_slices(const json& obj, const std::string& origin) {
    const std::string where = "slices.";
    check_keys(obj, origin, where,
               {"stimuli", "w_stim_levels", "bias_weight", "history_samples",
                "history_length"});
    SliceSettings sl;
    sl.stimuli = get_array<double>(obj, origin, where, "stimuli", sl.stimuli);
    sl.w_stim_levels = get_array<double>(obj, origin, where, "w_stim_levels",
                                         sl.w_stim_levels);
    sl.bias_weight =
        get_as<double>(obj, origin, where, "bias_weight", sl.bias_weight);
    sl.history_samples = get_as<int>(obj, origin, where, "history_samples",
                                     sl.history_samples);
    sl.history_length = get_as<int>(obj, origin, where, "history_length",
                                    sl.history_length);
    return sl;
}

GapSettings parse_gap(const json& obj, const std::string& origin) {
    const std::string where = "historygap.";
    check_keys(obj, origin, where,
               {"ks", "offsets", "burn_in", "draws", "w_stim", "w_bias"});
    GapSettings g;
    g.ks = get_array<int>(obj, origin, where, "ks", g.ks);
    g.offsets = get_array<int>(obj, origin, where, "offsets", g.offsets);
    g.burn_in = get_as<int>(obj, origin, where, "burn_in", g.burn_in);
    g.draws = get_as<int>(obj, origin, where, "draws", g.draws);
    g.w_stim = get_as<double>(obj, origin, where, "w_stim", g.w_stim);
    g.w_bias = get_as<double>(obj, origin, where, "w_bias", g.w_bias);
    return g;
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text,
                           const std::string& origin) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        fail(origin, std::string("invalid JSON: ") + e.what());
    }
    if (!doc.is_object()) fail(origin, "top level must be a JSON object");
    check_keys(doc, origin, "",
               {"version", "master_seed", "output_dir", "simulate", "fit",
                "eval", "slices", "historygap"});
    if (!doc.contains("version"))
        fail(origin, "missing required key 'version'");
    if (!doc.at("version").is_number_integer() ||
        doc.at("version").get<int>() != 1)
        fail(origin, "unsupported config version (expected 1)");

    RunConfig rc;
    rc.master_seed =
        get_as<std::uint64_t>(doc, origin, "", "master_seed", 0);
    rc.output_dir = get_as<std::string>(doc, origin, "", "output_dir", "");

    if (doc.contains("simulate")) {
        rc.sim = parse_sim(doc.at("simulate"), origin, rc.master_seed);
        rc.has_sim = true;
    }
    if (doc.contains("fit")) {
        parse_fit(doc.at("fit"), origin, rc.master_seed, rc);
        rc.has_fit = true;
    } else {
        rc.fit.seed = rc.master_seed;
    }
    if (doc.contains("eval")) {
        rc.eval = parse_eval(doc.at("eval"), origin);
        rc.has_eval = true;
    }
    if (doc.contains("slices")) {
        rc.slices = parse_slices(doc.at("slices"), origin);
        rc.has_slices = true;
    }
    if (doc.contains("historygap")) {
        rc.gap = parse_gap(doc.at("historygap"), origin);
        rc.has_gap = true;
    }
    return rc;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), path);
}

}  // namespace lrinfer
