#include "semitc/nn/tensor.hpp"

#include "semitc/error.hpp"

namespace semitc::nn {

std::string to_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? ", " : "") + std::to_string(shape[i]);
  return s + "]";
}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(values.begin(), values.end()) {
  if (data.size() != element_count(shape))
    throw ShapeError("tensor of shape " + to_string(shape) + " given " + std::to_string(data.size()) + " values");
}

}  // namespace semitc::nn
