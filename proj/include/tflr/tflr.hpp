#pragma once

#include "tflr/error.hpp"
#include "tflr/composition.hpp"
#include "tflr/objective.hpp"
#include "tflr/qp.hpp"
#include "tflr/weighted_qp.hpp"
#include "tflr/fit_result.hpp"
#include "tflr/cls.hpp"
#include "tflr/em.hpp"
#include "tflr/cirls.hpp"
#include "tflr/datagen.hpp"
#include "tflr/bench.hpp"
#include "tflr/csv.hpp"
