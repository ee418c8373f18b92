#pragma once

#include "osteorad/classifiers/classifier.hpp"
#include "osteorad/cv.hpp"
#include "osteorad/error.hpp"
#include "osteorad/filters.hpp"
#include "osteorad/grid.hpp"
#include "osteorad/hash.hpp"
#include "osteorad/imaging.hpp"
#include "osteorad/mask_postprocess.hpp"
#include "osteorad/metrics.hpp"
#include "osteorad/morphology.hpp"
#include "osteorad/parallel.hpp"
#include "osteorad/phantom.hpp"
#include "osteorad/pipeline.hpp"
#include "osteorad/preprocess.hpp"
#include "osteorad/radiomics/extract.hpp"
#include "osteorad/rng.hpp"
#include "osteorad/seg_objectives.hpp"
#include "osteorad/selection.hpp"
#include "osteorad/soft_tissue.hpp"
#include "osteorad/stats.hpp"
