#pragma once
// Umbrella header: the full public surface of the library.

#include <slqheat/backward_bspde.hpp>
#include <slqheat/chaos.hpp>
#include <slqheat/errors.hpp>
#include <slqheat/experiments.hpp>
#include <slqheat/forward_spde.hpp>
#include <slqheat/gradient_descent.hpp>
#include <slqheat/mesh_fem.hpp>
#include <slqheat/optimal_control.hpp>
#include <slqheat/parallel.hpp>
#include <slqheat/profiles.hpp>
#include <slqheat/time_noise.hpp>
#include <slqheat/types.hpp>
#include <slqheat/version.hpp>
