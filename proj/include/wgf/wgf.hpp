#pragma once

#include "wgf/error.hpp"
#include "wgf/random.hpp"
#include "wgf/geo.hpp"
#include "wgf/grid_io.hpp"
#include "wgf/kdtree.hpp"
#include "wgf/interpolate.hpp"
#include "wgf/dataset.hpp"
#include "wgf/nn/architecture.hpp"
#include "wgf/nn/kernels.hpp"
#include "wgf/nn/network.hpp"
#include "wgf/nn/optim.hpp"
#include "wgf/nn/train.hpp"
#include "wgf/nn/checkpoint.hpp"
#include "wgf/report.hpp"
#include "wgf/svg.hpp"
#include "wgf/synthetic.hpp"
#include "wgf/config.hpp"
