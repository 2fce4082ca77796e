#include "lrinfer/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "lrinfer/common.hpp"
#include "lrinfer/rng.hpp"
#include "lrinfer/threading.hpp"

namespace lrinfer {

void validate(const SimConfig& config) {
    if (config.n_animals < 1) throw ConfigError("sim: n_animals must be >= 1");
    if (config.n_trials < 1) throw ConfigError("sim: n_trials must be >= 1");
    if (config.bias_set.empty()) throw ConfigError("sim: bias_set is empty");
    if (config.noise_sigma_frac < 0.0) {
        throw ConfigError("sim: noise_sigma_frac must be >= 0");
    }
    if (config.rules.empty()) throw ConfigError("sim: no rule components");
    double total = 0.0;
    for (const auto& c : config.rules) {
        if (c.weight < 0.0) throw ConfigError("sim: negative mixture weight");
        if (c.rule.alpha < 0.0) throw ConfigError("sim: alpha must be >= 0");
        if (c.rule.etrace_window < 0) {
            throw ConfigError("sim: etrace window must be >= 0");
        }
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ConfigError("sim: mixture weights must sum to 1");
    }
}

std::vector<double> stimulus_grid(bool include_zero) {
    std::vector<double> grid;
    for (int k = -8; k <= 8; ++k) {
        if (k == 0 && !include_zero) continue;
        grid.push_back(0.25 * k);
    }
    return grid;
}

std::vector<int> mixture_assignment(const std::vector<RuleComponent>& rules,
                                    int n_animals) {
    const std::size_t m = rules.size();
    std::vector<int> counts(m, 0);
    std::vector<double> remainders(m, 0.0);
    int assigned = 0;
    for (std::size_t j = 0; j < m; ++j) {
        const double exact = rules[j].weight * n_animals;
        counts[j] = static_cast<int>(std::floor(exact));
        remainders[j] = exact - counts[j];
        assigned += counts[j];
    }
    // Largest remainder, ties to the lower index.
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return remainders[a] > remainders[b];
    });
    for (std::size_t k = 0; assigned < n_animals; ++k) {
        ++counts[order[k % m]];
        ++assigned;
    }

    std::vector<int> assignment;
    assignment.reserve(n_animals);
    for (std::size_t j = 0; j < m; ++j) {
        assignment.insert(assignment.end(), counts[j], static_cast<int>(j));
    }
    return assignment;
}

static std::string animal_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "a%05d", index);
    return buf;
}

Session simulate_animal(const SimConfig& config, int animal_index) {
    validate(config);
    if (animal_index < 0 || animal_index >= config.n_animals) {
        throw ConfigError("sim: animal index out of range");
    }
    const std::vector<double> grid =
        stimulus_grid(config.include_zero_stimulus);
    const RuleComponent& component =
        config.rules[mixture_assignment(config.rules, config.n_animals)
                         [animal_index]];
    GroundTruthRule rule(component.rule);

    const std::uint64_t seed =
        animal_seed(config.master_seed, static_cast<std::uint64_t>(animal_index));
    Rng traj(seed);
    Rng noise(noise_stream_seed(seed));
    const double sigma = config.noise_sigma_frac * component.rule.alpha;

    // Per-animal draw order on the trajectory stream: w0 (if uniform), bias,
    // then per trial: stimulus index, label coin (zero stimulus only), choice.
    const double w0 =
        config.w0_stim_uniform ? traj.uniform(-2.0, 2.0) : config.w0_stim;
    const double bias =
        config.bias_set[traj.uniform_below(config.bias_set.size())];

    Session session;
    session.animal_id = animal_name(animal_index);
    session.trials.reserve(config.n_trials);
    session.weights.reserve(config.n_trials);
    session.applied_dw.reserve(config.n_trials);

    Vec w = {w0, bias};
    for (int t = 0; t < config.n_trials; ++t) {
        const double s = grid[traj.uniform_below(grid.size())];
        const int label = s == 0.0 ? (traj.bernoulli(0.5) ? 1 : 0) : label_of(s);
        const Vec x = covariates(s);
        const double p = choice_probability(w, x);
        const int choice = traj.bernoulli(p) ? 1 : 0;
        const int reward = reward_of(choice, label);

        Vec dw = rule.update(w, x, choice, reward, label);
        if (!config.learn_bias) dw[1] = 0.0;
        if (sigma > 0.0) {
            // One Gaussian per coordinate, always drawn so the stream
            // position never depends on the mask.
            for (std::size_t c = 0; c < dw.size(); ++c) {
                const double g = noise.gaussian();
                if (c == 0 || config.learn_bias) dw[c] += sigma * g;
            }
        }

        session.trials.push_back({s, choice, reward, label});
        session.weights.push_back(w);
        session.applied_dw.push_back(dw);
        for (std::size_t c = 0; c < w.size(); ++c) w[c] += dw[c];
    }
    return session;
}

std::vector<Session> simulate_pool_serial(const SimConfig& config) {
    validate(config);
    std::vector<Session> pool;
    pool.reserve(config.n_animals);
    for (int i = 0; i < config.n_animals; ++i) {
        pool.push_back(simulate_animal(config, i));
    }
    return pool;
}

std::vector<Session> simulate_pool_parallel(const SimConfig& config, int jobs) {
    validate(config);
    std::vector<Session> pool(config.n_animals);
    parallel_for(static_cast<std::size_t>(config.n_animals), jobs,
                 [&](std::size_t i) {
                     pool[i] = simulate_animal(config, static_cast<int>(i));
                 });
    return pool;
}

std::vector<Session> simulate_pool(const SimConfig& config) {
    return simulate_pool_serial(config);
}

static double median_terminal_w_stim(const SimConfig& config) {
    std::vector<Session> pool = simulate_pool_serial(config);
    std::vector<double> terminal;
    terminal.reserve(pool.size());
    for (const Session& s : pool) {
        terminal.push_back(s.weights.back()[0] + s.applied_dw.back()[0]);
    }
    std::sort(terminal.begin(), terminal.end());
    const std::size_t n = terminal.size();
    return n % 2 == 1 ? terminal[n / 2]
                      : 0.5 * (terminal[n / 2 - 1] + terminal[n / 2]);
}

double calibrate_alpha(SimConfig config, double target, double tol,
                       int n_pilots) {
    validate(config);
    config.n_animals = n_pilots;
    const double base = config.rules[0].rule.alpha;
    if (base <= 0.0) throw ConfigError("calibrate: base alpha must be > 0");
    std::vector<double> ratios;
    for (const auto& c : config.rules) ratios.push_back(c.rule.alpha / base);

    auto median_at = [&](double alpha) {
        SimConfig c = config;
        for (std::size_t j = 0; j < c.rules.size(); ++j) {
            c.rules[j].rule.alpha = alpha * ratios[j];
        }
        return median_terminal_w_stim(c);
    };

    double lo = 1e-4, hi = 0.4;
    double m_lo = median_at(lo);
    for (int i = 0; i < 4 && m_lo > target; ++i) {
        lo *= 0.1;
        m_lo = median_at(lo);
    }
    double m_hi = median_at(hi);
    for (int i = 0; i < 6 && m_hi < target; ++i) {
        hi *= 2.0;
        m_hi = median_at(hi);
    }
    if (m_lo > target || m_hi < target) {
        throw NumericError("calibrate: could not bracket the target median");
    }
    for (int iter = 0; iter < 100; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double m = median_at(mid);
        if (std::abs(m - target) <= tol) return mid;
        if (m < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    throw NumericError("calibrate: bisection did not converge");
}

}  // namespace lrinfer
