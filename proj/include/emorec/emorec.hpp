#pragma once

#include "emorec/corpus.hpp"
#include "emorec/error.hpp"
#include "emorec/eval.hpp"
#include "emorec/metrics.hpp"
#include "emorec/model.hpp"
#include "emorec/topics.hpp"
