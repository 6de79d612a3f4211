#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "emgf/tensor.hpp"

namespace emgf {

struct NamedParameter {
    std::string name;
    Tensor value;
};

/// Insertion-ordered collection of trainable tensors. Names are dotted paths
/// ("gcn.dep.W0"); the segment before the first dot is the parameter group.
class ParameterStore {
public:
    Tensor add(std::string name, Tensor value);
    Tensor xavier(std::string name, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);
    Tensor constant(std::string name, Shape shape, double value);

    const Tensor& get(const std::string& name) const;
    bool contains(const std::string& name) const;
    const std::vector<NamedParameter>& all() const { return params_; }
    std::vector<NamedParameter>& all() { return params_; }
    std::size_t scalar_count() const;

    void zero_grad();
    /// Copies values (not gradients) from a store with identical layout.
    void copy_values_from(const ParameterStore& other);

private:
    std::vector<NamedParameter> params_;
};

std::string parameter_group(const std::string& name);

}  // namespace emgf
