#pragma once

// Umbrella header.
#include "coding.hpp"
#include "criteria.hpp"
#include "dataset.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "lti.hpp"
#include "matching.hpp"
#include "nugap.hpp"
#include "pipeline.hpp"
#include "report.hpp"
#include "sysid.hpp"
#include "twin.hpp"
