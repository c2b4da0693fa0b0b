#pragma once

#include "emgds/data.hpp"
#include "emgds/error.hpp"
#include "emgds/features.hpp"
#include "emgds/grouping.hpp"
#include "emgds/linalg.hpp"
#include "emgds/model_io.hpp"
#include "emgds/pca.hpp"
#include "emgds/pipeline.hpp"
#include "emgds/svm.hpp"
