#pragma once

#include "qnr/channel_spec.hpp"
#include "qnr/channels.hpp"
#include "qnr/dataset_io.hpp"
#include "qnr/error.hpp"
#include "qnr/experiments.hpp"
#include "qnr/nn/adam.hpp"
#include "qnr/nn/mlp.hpp"
#include "qnr/nn/model_io.hpp"
#include "qnr/qstate.hpp"
#include "qnr/rng.hpp"
#include "qnr/sampling.hpp"
