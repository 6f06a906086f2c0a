#pragma once

// Library umbrella. The command-line front end lives in genage/cli.hpp and
// additionally needs CLI11.

#include "genage/core.hpp"
#include "genage/error.hpp"
#include "genage/evaluation.hpp"
#include "genage/hinge_qp.hpp"
#include "genage/io.hpp"
#include "genage/metric.hpp"
#include "genage/pls.hpp"
#include "genage/svm.hpp"
#include "genage/svor.hpp"
#include "genage/synth.hpp"
#include "genage/trainer.hpp"
