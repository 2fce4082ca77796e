// Benchmark: OpenMP-parallel kernels against the serial reference paths.
// Exercises the three data-parallel surfaces (pool simulation, batched
// session gradients via held-out scoring, and fold-parallel refits) and
// checks that parallel results are bit-identical to the serial ones.

#include <chrono>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lrinfer/analysis.hpp"
#include "lrinfer/fit.hpp"
#include "lrinfer/simulate.hpp"
#include "lrinfer/threading.hpp"

namespace {

using namespace lrinfer;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool pools_identical(const std::vector<Session>& a,
                     const std::vector<Session>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].animal_id != b[i].animal_id ||
            a[i].trials.size() != b[i].trials.size())
            return false;
        for (std::size_t t = 0; t < a[i].trials.size(); ++t) {
            // Field-wise: the struct has tail padding memcmp would misread.
            if (a[i].trials[t].stimulus != b[i].trials[t].stimulus ||
                a[i].trials[t].choice != b[i].trials[t].choice ||
                a[i].trials[t].reward != b[i].trials[t].reward ||
                a[i].trials[t].label != b[i].trials[t].label)
                return false;
            if (a[i].weights[t] != b[i].weights[t] ||
                a[i].applied_dw[t] != b[i].applied_dw[t])
                return false;
        }
    }
    return true;
}

void report(const char* name, double serial_s, double parallel_s,
            bool identical) {
    std::printf("%-28s serial %8.3fs   parallel %8.3fs   speedup %5.2fx   "
                "bit-identical %s\n",
                name, serial_s, parallel_s,
                parallel_s > 0 ? serial_s / parallel_s : 0.0,
                identical ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Serial-reference vs OpenMP-parallel benchmark"};
    int jobs = hardware_jobs();
    int n_animals = 64;
    int n_trials = 400;
    int fit_epochs = 12;
    app.add_option("--jobs", jobs, "Parallel worker threads");
    app.add_option("--animals", n_animals, "Pool size");
    app.add_option("--trials", n_trials, "Trials per animal");
    app.add_option("--epochs", fit_epochs, "Epochs for the refit benchmark");
    CLI11_PARSE(app, argc, argv);

    std::printf("jobs=%d animals=%d trials=%d\n", jobs, n_animals, n_trials);
    bool all_ok = true;

    SimConfig sim;
    sim.n_animals = n_animals;
    sim.n_trials = n_trials;
    sim.master_seed = 7;
    sim.rules = {{RuleParams{RuleKind::Reinforce, 0.05, 0}, 1.0}};

    auto t0 = Clock::now();
    const auto pool_serial = simulate_pool_serial(sim);
    const double sim_serial = seconds_since(t0);
    t0 = Clock::now();
    const auto pool_parallel = simulate_pool_parallel(sim, jobs);
    const double sim_parallel = seconds_since(t0);
    const bool sim_ok = pools_identical(pool_serial, pool_parallel);
    report("pool simulation", sim_serial, sim_parallel, sim_ok);
    all_ok = all_ok && sim_ok;

    // Batched per-session forward/scoring, the inner loop of training.
    FitConfig fc;
    fc.kind = ModelKind::DNNGLM;
    fc.seed = 3;
    fc.epochs = 1;
    fc.patience = 0;
    const FittedModel probe = fit(pool_serial, fc).model;

    t0 = Clock::now();
    const LlReport ll_serial = heldout_log_likelihood(probe, pool_serial, 1);
    const double ll_serial_s = seconds_since(t0);
    t0 = Clock::now();
    const LlReport ll_parallel =
        heldout_log_likelihood(probe, pool_serial, jobs);
    const double ll_parallel_s = seconds_since(t0);
    bool ll_ok = ll_serial.total == ll_parallel.total;
    for (const auto& [id, v] : ll_serial.per_animal)
        ll_ok = ll_ok && v == ll_parallel.per_animal.at(id);
    report("held-out scoring", ll_serial_s, ll_parallel_s, ll_ok);
    all_ok = all_ok && ll_ok;

    // Batched gradients inside one fit.
    FitConfig fb = fc;
    fb.epochs = fit_epochs;
    fb.batch_size = 8;
    t0 = Clock::now();
    fb.jobs = 1;
    const FittedModel fit_serial = fit(pool_serial, fb).model;
    const double fit_serial_s = seconds_since(t0);
    t0 = Clock::now();
    fb.jobs = jobs;
    const FittedModel fit_parallel = fit(pool_serial, fb).model;
    const double fit_parallel_s = seconds_since(t0);
    const bool fit_ok = fit_serial.params == fit_parallel.params;
    report("batched-gradient fit", fit_serial_s, fit_parallel_s, fit_ok);
    all_ok = all_ok && fit_ok;

    std::printf("%s\n", all_ok ? "all parallel kernels bit-identical"
                               : "MISMATCH between serial and parallel");
    return all_ok ? 0 : 1;
}
