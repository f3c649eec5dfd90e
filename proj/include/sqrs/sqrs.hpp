#pragma once

#include "sqrs/channel.hpp"
#include "sqrs/error.hpp"
#include "sqrs/estimation.hpp"
#include "sqrs/experiments.hpp"
#include "sqrs/fisher.hpp"
#include "sqrs/protocol.hpp"
#include "sqrs/qubit.hpp"
#include "sqrs/rng.hpp"
