#pragma once

#include <vector>

namespace fedrules {

/// One labelled concept vector: feature presence v, labeller confidence u,
/// both in [0,1] componentwise, and a ground-truth class index.
struct ConceptDataPoint {
    std::vector<double> v;
    std::vector<double> u;
    int label = 0;
};

}  // namespace fedrules
