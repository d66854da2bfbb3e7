#pragma once

#include <string>

#include "pid/optimizer.hpp"
#include "pid/student.hpp"

namespace pid {

// On-disk format (JSON, version 1):
//   {"version": 1, "config": {...student config...},
//    "params": [nested row-major arrays], "ema_params": [...],
//    "step": int, "rng_state": "...", "opt_state": {"m": [...], "v": [...], "steps": int}}
// params/ema_params alternate per layer: a 2-d weight array (rows = output
// units), then a 1-d bias array. All floats are serialized at full precision,
// so load(save(x)) reproduces every 64-bit value exactly.
struct Checkpoint {
  int version = 1;
  StudentConfig student_cfg;
  StudentParams params;
  StudentParams ema;
  long step = 0;
  std::string rng_state;
  OptState opt;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pid
