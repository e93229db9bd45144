#pragma once

// Umbrella header for the repsim library.

#include "repsim/commands.hpp"
#include "repsim/config.hpp"
#include "repsim/ensemble.hpp"
#include "repsim/error.hpp"
#include "repsim/linalg.hpp"
#include "repsim/linear_models.hpp"
#include "repsim/parallel.hpp"
#include "repsim/rca.hpp"
#include "repsim/report.hpp"
#include "repsim/representation.hpp"
#include "repsim/rng.hpp"
#include "repsim/rsa.hpp"
#include "repsim/stats.hpp"
#include "repsim/store.hpp"
#include "repsim/text.hpp"
#include "repsim/train.hpp"
#include "repsim/vocab.hpp"
#include "repsim/vocab_set.hpp"
