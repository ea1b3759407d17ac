#pragma once

#include "psd/checks.hpp"
#include "psd/diffusion.hpp"
#include "psd/ensemble.hpp"
#include "psd/error.hpp"
#include "psd/io.hpp"
#include "psd/master.hpp"
#include "psd/noise.hpp"
#include "psd/quantum.hpp"
#include "psd/random_ops.hpp"
#include "psd/spacetime.hpp"
