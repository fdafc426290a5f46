#include "radiomap/tensor.hpp"

namespace radiomap {

template struct Tensor<float>;
template struct Tensor<double>;

} // namespace radiomap
