#pragma once

#include "beamcrb/array_model.hpp"
#include "beamcrb/core.hpp"
#include "beamcrb/crb.hpp"
#include "beamcrb/design.hpp"
#include "beamcrb/mle.hpp"
#include "beamcrb/recovery.hpp"
#include "beamcrb/sector.hpp"
