#pragma once

#include <string>

#include "lrinfer/fit.hpp"

namespace lrinfer {

// Binary model container, version 1. Layout (all integers and IEEE-754
// doubles little-endian):
//   magic "RLRN" | u32 version | u32 kind | u32 d | u32 n_inputs |
//   u32 hidden | u32 w0_mode | u8 w0_trainable | u32 psychometric_trials |
//   f64 w0_offset_stim | u64 n_params | f64[n_params] |
//   u32 n_norm | f64[n_norm] mean | f64[n_norm] std |
//   u64 len(w0_value) | f64[...] |
//   u64 n_animals | { u64 len(id) | id bytes | f64[d] } per animal |
//   32-byte SHA-256 of everything above
// Training diagnostics (loss curves etc.) are not part of the container.
// save -> load -> save is byte-identical.

void save_model(const std::string& path, const FittedModel& model);
FittedModel load_model(const std::string& path);

// SHA-256 of the serialized container body (the bytes the trailing checksum
// covers); used as the model's content hash in reports.
std::string model_content_hash(const FittedModel& model);

}  // namespace lrinfer
