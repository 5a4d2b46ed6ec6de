#pragma once

#include "legros/bigram.hpp"
#include "legros/cooccur.hpp"
#include "legros/embeddings.hpp"
#include "legros/error.hpp"
#include "legros/lexseg.hpp"
#include "legros/metrics.hpp"
#include "legros/subspace.hpp"
#include "legros/textio.hpp"
