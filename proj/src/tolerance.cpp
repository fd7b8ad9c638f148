#include "sdpc/tolerance.hpp"

namespace sdpc {

bool ToleranceConfig::valid() const {
  return abs > 0 && rel > 0 && gap > 0 && feas > 0 && branch > 0 && sub > 0 && face > 0 &&
         max_iter > 0 && epsilon_default > 0 && branch >= gap;
}

}  // namespace sdpc
