#pragma once

#include "fpbs/model.hpp"
#include "fpbs/query_table.hpp"
#include "fpbs/fp_tree.hpp"
#include "fpbs/scheduler.hpp"
#include "fpbs/mapper.hpp"
#include "fpbs/simulator.hpp"
#include "fpbs/oracle.hpp"
#include "fpbs/workload.hpp"
#include "fpbs/io.hpp"
#include "fpbs/experiment.hpp"
