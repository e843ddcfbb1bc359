#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "pillarnav/tensor.hpp"

namespace pillarnav {

// Checkpoint file layout: one line of JSON manifest (format version, named
// arrays with shapes and byte offsets, free-form metadata), followed by a
// payload of little-endian IEEE-754 float32 values. Round-trips bit-exactly.
class Checkpoint {
public:
    struct Array {
        std::vector<int> shape;
        std::vector<float> data;
    };

    nlohmann::json metadata;

    void add(const std::string& name, const std::vector<int>& shape,
             const std::vector<float>& data);
    void add(const std::string& name, const Tensor& t);
    bool has(const std::string& name) const { return arrays_.count(name) > 0; }
    const Array& get(const std::string& name) const;
    // Copies data into an existing tensor; throws on shape mismatch.
    void load_into(const std::string& name, Tensor& t) const;
    const std::map<std::string, Array>& arrays() const { return arrays_; }

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

private:
    std::map<std::string, Array> arrays_;
};

}  // namespace pillarnav
