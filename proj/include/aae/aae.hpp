#pragma once

#include "aae/errors.hpp"
#include "aae/neural.hpp"
#include "aae/checkpoint.hpp"
#include "aae/csv.hpp"
#include "aae/journal.hpp"
#include "aae/synth.hpp"
#include "aae/model.hpp"
#include "aae/latent.hpp"
#include "aae/attack.hpp"
#include "aae/caat.hpp"

namespace aae {
inline constexpr const char* kVersion = "1.0.0";
}
