#pragma once

#include <vector>

#include "hornets/dataset.hpp"
#include "hornets/rng.hpp"

namespace hornets {

// Truth tables for the five generator gates. NOT is unary and reads a only.
int apply_gate(GateSpec::Op op, int a, int b);

// c x d Bernoulli(0.5) bits; labels[i] = op(B[i, j0], B[i, j1]).
// Same seed, same dataset, bit for bit.
Dataset generate_gate_dataset(const GateSpec& spec);

// One dataset per (gate, dim, repetition) with seeds derived from baseSeed.
std::vector<Dataset> generate_suite(const std::vector<GateSpec::Op>& gates,
                                    const std::vector<std::size_t>& dims, std::size_t repetitions,
                                    std::uint64_t base_seed);

// Default dimensions used by the synthetic table.
const std::vector<std::size_t>& default_suite_dims();

// Seed for one suite cell, exposed so harnesses can regenerate single cells.
std::uint64_t suite_cell_seed(std::uint64_t base_seed, GateSpec::Op op, std::size_t dim,
                              std::size_t repetition);

}  // namespace hornets
