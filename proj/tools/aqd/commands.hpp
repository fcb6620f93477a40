#pragma once

#include <optional>

#include "manifest.hpp"

namespace aqd::cli {

void cmd_synth(const Manifest& m);
void cmd_features(const Manifest& m);
void cmd_pseudo_gt(const Manifest& m);
void cmd_train_upsampler(const Manifest& m);
/// All manifest years when `year` is empty.
void cmd_downscale(const Manifest& m, std::optional<int> year);
void cmd_recharge(const Manifest& m);
void cmd_trends(const Manifest& m);
void cmd_eval(const Manifest& m);

}  // namespace aqd::cli
