#pragma once

namespace inrshape::detail {

extern const int kEdgeTable[256];
extern const int kTriTable[256][16];

}  // namespace inrshape::detail
