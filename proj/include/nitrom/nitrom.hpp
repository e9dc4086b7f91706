#pragma once

#include "nitrom/adjoint.hpp"
#include "nitrom/baselines.hpp"
#include "nitrom/core.hpp"
#include "nitrom/dynamics.hpp"
#include "nitrom/evaluation.hpp"
#include "nitrom/full_order.hpp"
#include "nitrom/io.hpp"
#include "nitrom/manifolds.hpp"
#include "nitrom/model.hpp"
#include "nitrom/optim.hpp"
#include "nitrom/parallel.hpp"
#include "nitrom/polynomial.hpp"
#include "nitrom/systems.hpp"
#include "nitrom/trainer.hpp"
