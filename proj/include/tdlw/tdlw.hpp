#pragma once

// Convenience umbrella: pulls in the whole library.

#include <tdlw/types.hpp>
#include <tdlw/linalg.hpp>
#include <tdlw/lambertw.hpp>
#include <tdlw/model.hpp>
#include <tdlw/spectrum.hpp>
#include <tdlw/rootfinder.hpp>
#include <tdlw/nyquist.hpp>
#include <tdlw/controller.hpp>
#include <tdlw/simulate.hpp>
#include <tdlw/descriptor.hpp>
#include <tdlw/report.hpp>
