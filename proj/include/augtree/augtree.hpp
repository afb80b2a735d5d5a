#pragma once
// Umbrella header.

#include "augtree/augmented_tree.hpp"
#include "augtree/energy.hpp"
#include "augtree/errors.hpp"
#include "augtree/exact_reduction.hpp"
#include "augtree/index_tree.hpp"
#include "augtree/linalg.hpp"
#include "augtree/model.hpp"
#include "augtree/network.hpp"
#include "augtree/potential.hpp"
#include "augtree/resistance.hpp"
#include "augtree/serialize.hpp"
