#pragma once

#include "compeval/cache.hpp"
#include "compeval/dataset.hpp"
#include "compeval/demoforge.hpp"
#include "compeval/errors.hpp"
#include "compeval/gateway.hpp"
#include "compeval/mocks.hpp"
#include "compeval/net.hpp"
#include "compeval/prompt.hpp"
#include "compeval/remote.hpp"
#include "compeval/report.hpp"
#include "compeval/runner.hpp"
#include "compeval/scoring.hpp"
