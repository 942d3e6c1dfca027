#pragma once

// Convenience umbrella: pulls in the whole steering-geometry toolkit.

#include "qsteer/errors.hpp"
#include "qsteer/linalg.hpp"
#include "qsteer/twoqubit.hpp"
#include "qsteer/canonical.hpp"
#include "qsteer/symmetric3.hpp"
#include "qsteer/oracle.hpp"
#include "qsteer/report.hpp"
