#pragma once

#include "survrnc/core.hpp"
#include "survrnc/data.hpp"
#include "survrnc/heads.hpp"
#include "survrnc/loss.hpp"
#include "survrnc/metrics.hpp"
#include "survrnc/nn.hpp"
#include "survrnc/pairsets.hpp"
#include "survrnc/serialize.hpp"
#include "survrnc/trainer.hpp"
