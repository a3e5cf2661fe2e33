#pragma once

#include "logicode/bench.hpp"
#include "logicode/checklang/compile.hpp"
#include "logicode/checklang/eval.hpp"
#include "logicode/checklang/parser.hpp"
#include "logicode/checklang/printer.hpp"
#include "logicode/checklang/validate.hpp"
#include "logicode/codegen.hpp"
#include "logicode/common.hpp"
#include "logicode/dataset.hpp"
#include "logicode/exec.hpp"
#include "logicode/fact_service.hpp"
#include "logicode/facts.hpp"
#include "logicode/geometry.hpp"
#include "logicode/llm.hpp"
#include "logicode/pipeline.hpp"
#include "logicode/prompt.hpp"
#include "logicode/report.hpp"
#include "logicode/rules.hpp"
#include "logicode/synth.hpp"
