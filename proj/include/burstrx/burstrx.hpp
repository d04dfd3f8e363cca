#pragma once

#include "burstrx/common.hpp"
#include "burstrx/constellation.hpp"
#include "burstrx/channel.hpp"
#include "burstrx/likelihood.hpp"
#include "burstrx/estimator.hpp"
#include "burstrx/ldpc.hpp"
#include "burstrx/pipeline.hpp"
#include "burstrx/harness.hpp"
