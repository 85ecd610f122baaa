#pragma once

// Umbrella header.

#include "adg/alignment.hpp"
#include "adg/corpus.hpp"
#include "adg/embedding.hpp"
#include "adg/error.hpp"
#include "adg/evalstats.hpp"
#include "adg/feedback.hpp"
#include "adg/graph.hpp"
#include "adg/report.hpp"
#include "adg/service.hpp"
#include "adg/similarity.hpp"
#include "adg/text.hpp"
