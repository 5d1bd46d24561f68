#pragma once

#include "coremix/dataset.hpp"
#include "coremix/embedding.hpp"
#include "coremix/errors.hpp"
#include "coremix/filtration.hpp"
#include "coremix/generation.hpp"
#include "coremix/image.hpp"
#include "coremix/manifest.hpp"
#include "coremix/metrics.hpp"
#include "coremix/mixing.hpp"
#include "coremix/pipeline.hpp"
#include "coremix/prompting.hpp"
#include "coremix/synthetic.hpp"
