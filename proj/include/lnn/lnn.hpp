#pragma once

#include "lnn/activation.hpp"
#include "lnn/architecture.hpp"
#include "lnn/bands.hpp"
#include "lnn/basis.hpp"
#include "lnn/binary.hpp"
#include "lnn/config.hpp"
#include "lnn/dataset.hpp"
#include "lnn/errors.hpp"
#include "lnn/io.hpp"
#include "lnn/kernelbase.hpp"
#include "lnn/localfit.hpp"
#include "lnn/parallel.hpp"
#include "lnn/regress.hpp"
#include "lnn/serialize.hpp"
#include "lnn/simlab.hpp"
#include "lnn/stats.hpp"
