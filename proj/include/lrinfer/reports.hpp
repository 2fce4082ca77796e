#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "lrinfer/analysis.hpp"
#include "lrinfer/fit.hpp"
#include "lrinfer/run_config.hpp"

namespace lrinfer {

using OrderedJson = nlohmann::ordered_json;

// JSON value for a possibly infinite quantity: finite numbers stay numbers,
// -infinity becomes the documented "-inf" token.
OrderedJson json_number_or_token(double v);

OrderedJson fit_config_json(const FitConfig& config);

// Fit report ("version": 1): provenance hashes, config echo, training
// diagnostics and wall time.
OrderedJson fit_report(const FitResult& result, const FitConfig& config,
                       const std::string& dataset_path,
                       const std::string& dataset_sha256,
                       const std::string& model_sha256,
                       double wall_time_sec);

// One evaluated model's provenance entry.
struct EvalModelRef {
    std::string path;       // model file, or "" for synthetic baselines
    std::string sha256;     // content hash, or "" for baselines
    std::string kind_name;  // model kind, or "chance"
};

// Evaluation report ("version": 1) for any protocol; refs must parallel
// result.models.
OrderedJson eval_report(const CrossvalResult& result,
                        const std::string& protocol,
                        const std::vector<EvalModelRef>& refs,
                        const std::string& dataset_path,
                        const std::string& dataset_sha256,
                        const EvalSettings& settings);

// Fixed-width summary of totals and pairwise tests for standard output.
std::string render_eval_table(const CrossvalResult& result,
                              const std::vector<EvalModelRef>& refs);

// Serializes with 2-space indentation and a trailing newline.
void write_json_file(const std::string& path, const OrderedJson& doc);

}  // namespace lrinfer
