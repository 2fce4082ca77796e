#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lrinfer/analysis.hpp"
#include "lrinfer/glm.hpp"

namespace lrinfer {

// Shortest decimal string that parses back to exactly the same double
// ("%.17g" tightened while the round-trip holds). All CSV/JSON number
// output goes through this so reruns are byte-identical.
std::string format_double(double v);

// Flat trial table, one row per trial:
//   animal_id,trial_index,stimulus,choice,reward,label
// Written in pool order with per-animal trial_index counting from 0.
void write_dataset_csv(const std::string& path,
                       const std::vector<Session>& pool);

// Latent sidecar, aligned row-for-row with the dataset:
//   animal_id,trial_index,w_stim,w_bias,dw_stim,dw_bias
// Requires every session to carry simulator latents.
void write_latents_csv(const std::string& path,
                       const std::vector<Session>& pool);

// Strict loader. Any malformed row (wrong column count, unparsable field)
// raises ConfigError; any semantic violation (choice/reward/label outside
// {0,1}, reward != [choice == label], non-contiguous trial_index, animal
// rows not forming one contiguous block) raises DataError. Every message
// carries the 1-based line number.
std::vector<Session> load_dataset_csv(const std::string& path);

// Attaches sidecar latents to an already-loaded pool; the sidecar must
// cover exactly the same animals and trials, in the same order.
void load_latents_csv(const std::string& path, std::vector<Session>& pool);

// Tidy slice table: stimulus,w_stim,correct,dw_stim,dw_bias. The loader is
// strict in the same way as the dataset loader.
void write_slices_csv(const std::string& path,
                      const std::vector<SliceRow>& rows);
std::vector<SliceRow> load_slices_csv(const std::string& path);

// Hex-encoded SHA-256 digests, used for report provenance and the model
// container checksum.
std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_file(const std::string& path);

}  // namespace lrinfer
