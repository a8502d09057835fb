#pragma once

// Umbrella header: differentiable tensors, a statevector circuit simulator
// with adjoint gradients, variational-circuit layers, adversarial attacks,
// expressibility estimation and the benchmark experiment driver.

#include "qadv/adjoint.hpp"
#include "qadv/attacks.hpp"
#include "qadv/autodiff.hpp"
#include "qadv/circuit.hpp"
#include "qadv/dataset.hpp"
#include "qadv/errors.hpp"
#include "qadv/experiment.hpp"
#include "qadv/expressibility.hpp"
#include "qadv/io.hpp"
#include "qadv/model.hpp"
#include "qadv/report.hpp"
#include "qadv/rng.hpp"
#include "qadv/statevector.hpp"
#include "qadv/tensor.hpp"
#include "qadv/vqc.hpp"
