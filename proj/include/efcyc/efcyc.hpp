#pragma once

#include "efcyc/chain.hpp"
#include "efcyc/cli.hpp"
#include "efcyc/cocycle.hpp"
#include "efcyc/errors.hpp"
#include "efcyc/estimate.hpp"
#include "efcyc/extension.hpp"
#include "efcyc/folner.hpp"
#include "efcyc/group.hpp"
#include "efcyc/io.hpp"
#include "efcyc/pipeline.hpp"
#include "efcyc/rational.hpp"
#include "efcyc/seminorm.hpp"
#include "efcyc/simplex.hpp"
#include "efcyc/twisted.hpp"
