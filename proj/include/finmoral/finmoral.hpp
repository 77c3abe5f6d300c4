#pragma once

#include "finmoral/aggregator.hpp"
#include "finmoral/candidate.hpp"
#include "finmoral/config.hpp"
#include "finmoral/context.hpp"
#include "finmoral/cot.hpp"
#include "finmoral/decimal.hpp"
#include "finmoral/encoder.hpp"
#include "finmoral/errors.hpp"
#include "finmoral/eval.hpp"
#include "finmoral/normalize.hpp"
#include "finmoral/numsolver.hpp"
#include "finmoral/pipeline.hpp"
#include "finmoral/query_generator.hpp"
#include "finmoral/shim_client.hpp"
#include "finmoral/sql.hpp"
#include "finmoral/sql_exec.hpp"
#include "finmoral/table.hpp"
#include "finmoral/value.hpp"
