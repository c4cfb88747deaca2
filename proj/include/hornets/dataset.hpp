#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hornets/matrix.hpp"

namespace hornets {

// Recipe for one synthetic logic-gate dataset.
struct GateSpec {
    enum class Op { And, Or, Not, Xor, Xnor };
    Op op = Op::Xor;
    std::size_t dim = 3;
    std::size_t count = 128;
    std::uint64_t seed = 0;
    std::size_t j0 = 0;  // generating feature indices
    std::size_t j1 = 1;
};

std::string gate_name(GateSpec::Op op);
std::optional<GateSpec::Op> parse_gate(const std::string& name);

// Feature matrix plus labels and metadata; the unit every harness operation
// works on.
struct Dataset {
    Matrix features;
    std::vector<int> labels;
    std::vector<std::string> feature_names;
    std::size_t class_count = 0;
    std::optional<GateSpec> provenance;

    std::size_t size() const { return labels.size(); }

    // Row subset (for folds/holdouts); provenance is preserved.
    Dataset subset(const std::vector<std::size_t>& indices) const;
};

}  // namespace hornets
