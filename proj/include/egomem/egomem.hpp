#pragma once

#include "egomem/collector.hpp"
#include "egomem/errors.hpp"
#include "egomem/features.hpp"
#include "egomem/game.hpp"
#include "egomem/hungarian.hpp"
#include "egomem/image.hpp"
#include "egomem/io.hpp"
#include "egomem/perception.hpp"
#include "egomem/pipeline.hpp"
#include "egomem/random.hpp"
#include "egomem/recognition.hpp"
#include "egomem/session.hpp"
#include "egomem/sls.hpp"
#include "egomem/spatial_memory.hpp"
#include "egomem/tracker.hpp"
#include "egomem/world.hpp"
