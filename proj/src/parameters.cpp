#include "emgf/parameters.hpp"

#include <algorithm>
#include <cmath>

namespace emgf {

Tensor ParameterStore::add(std::string name, Tensor value) {
    if (contains(name)) throw ConfigError("parameter '" + name + "' registered twice");
    value.set_requires_grad(true);
    params_.push_back({std::move(name), value});
    return value;
}

Tensor ParameterStore::xavier(std::string name, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> v(fan_in * fan_out);
    for (double& x : v) x = dist(rng);
    return add(std::move(name), Tensor({fan_in, fan_out}, std::move(v)));
}

Tensor ParameterStore::constant(std::string name, Shape shape, double value) {
    return add(std::move(name), Tensor::full(std::move(shape), value));
}

const Tensor& ParameterStore::get(const std::string& name) const {
    for (const auto& p : params_)
        if (p.name == name) return p.value;
    throw ConfigError("no parameter named '" + name + "'");
}

bool ParameterStore::contains(const std::string& name) const {
    return std::any_of(params_.begin(), params_.end(), [&](const NamedParameter& p) { return p.name == name; });
}

std::size_t ParameterStore::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

void ParameterStore::zero_grad() {
    for (auto& p : params_) p.value.zero_grad();
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
    if (other.params_.size() != params_.size()) throw ConfigError("parameter layouts differ");
    for (std::size_t i = 0; i < params_.size(); ++i) {
        auto& dst = params_[i];
        const auto& src = other.params_[i];
        if (dst.name != src.name || dst.value.shape() != src.value.shape())
            throw ConfigError("parameter layouts differ at '" + dst.name + "'");
        std::copy(src.value.data().begin(), src.value.data().end(), dst.value.data().begin());
    }
}

std::string parameter_group(const std::string& name) { return name.substr(0, name.find('.')); }

}  // namespace emgf
