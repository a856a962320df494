#ifndef SPACELINK_SPACELINK_HPP
#define SPACELINK_SPACELINK_HPP

#include "spacelink/analysis.hpp"
#include "spacelink/catalog.hpp"
#include "spacelink/common.hpp"
#include "spacelink/config.hpp"
#include "spacelink/events.hpp"
#include "spacelink/experiments.hpp"
#include "spacelink/geometry.hpp"
#include "spacelink/linksim.hpp"
#include "spacelink/photonics.hpp"
#include "spacelink/protocols.hpp"
#include "spacelink/random.hpp"
#include "spacelink/timing.hpp"

#endif  // SPACELINK_SPACELINK_HPP
