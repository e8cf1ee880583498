#pragma once

#include "veingrow/error.hpp"
#include "veingrow/geometry.hpp"
#include "veingrow/ingest.hpp"
#include "veingrow/losses.hpp"
#include "veingrow/sccs.hpp"
#include "veingrow/targets.hpp"
#include "veingrow/vein_codec.hpp"
