#pragma once

#include "ergolearn/bayes.hpp"
#include "ergolearn/components.hpp"
#include "ergolearn/config.hpp"
#include "ergolearn/core.hpp"
#include "ergolearn/decisions.hpp"
#include "ergolearn/empirical.hpp"
#include "ergolearn/merging.hpp"
#include "ergolearn/rng.hpp"
#include "ergolearn/runner.hpp"
#include "ergolearn/version.hpp"
