#pragma once

#include "furbi/samplers/blocked.hpp"
#include "furbi/samplers/common.hpp"
#include "furbi/samplers/ferguson_klass.hpp"
#include "furbi/samplers/gaussian_components.hpp"
#include "furbi/samplers/marginal.hpp"
#include "furbi/samplers/nig_components.hpp"
