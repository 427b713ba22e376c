#pragma once

#include "overgen/aligner.hpp"
#include "overgen/alignment.hpp"
#include "overgen/corpus.hpp"
#include "overgen/detector.hpp"
#include "overgen/error.hpp"
#include "overgen/evalkit.hpp"
#include "overgen/label.hpp"
#include "overgen/qe_ensemble.hpp"
#include "overgen/synthgen.hpp"
#include "overgen/tokenizer.hpp"
