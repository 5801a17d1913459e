#pragma once

#include "snnf/config.hpp"
#include "snnf/core_geometry.hpp"
#include "snnf/edge_registration.hpp"
#include "snnf/errors.hpp"
#include "snnf/evaluation_metrics.hpp"
#include "snnf/image.hpp"
#include "snnf/io.hpp"
#include "snnf/nearest_neighbor_field.hpp"
#include "snnf/parallel.hpp"
#include "snnf/random.hpp"
#include "snnf/semantic_edge_map.hpp"
#include "snnf/sequence_tracker.hpp"
#include "snnf/synthetic_scene.hpp"
#include "snnf/trajectory.hpp"
