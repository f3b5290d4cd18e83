#pragma once

#include "densefield/annotation.hpp"
#include "densefield/error.hpp"
#include "densefield/field_codec.hpp"
#include "densefield/geodesic.hpp"
#include "densefield/geometry.hpp"
#include "densefield/kmeans.hpp"
#include "densefield/line_fit.hpp"
#include "densefield/mesh_io.hpp"
#include "densefield/metrics.hpp"
#include "densefield/network/config.hpp"
#include "densefield/network/layers.hpp"
#include "densefield/network/loss.hpp"
#include "densefield/network/model.hpp"
#include "densefield/network/weights.hpp"
#include "densefield/pipeline.hpp"
#include "densefield/sampling.hpp"
#include "densefield/spatial.hpp"
#include "densefield/synthetic.hpp"
