#pragma once

#include "fcq/bridge.hpp"
#include "fcq/decomposer.hpp"
#include "fcq/evaluator.hpp"
#include "fcq/gyo.hpp"
#include "fcq/model.hpp"
#include "fcq/oracle.hpp"
#include "fcq/parser.hpp"
#include "fcq/planner.hpp"
#include "fcq/regex.hpp"
#include "fcq/sercq.hpp"
#include "fcq/word_index.hpp"
