#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace swarmherd {

/// Random stream used throughout. Every stochastic routine takes one by
/// reference; concurrent callers need independent streams.
using Rng = std::mt19937_64;

/// Deterministic seed for a sub-stream identified by `path` under `master`,
/// e.g. derive_seed(master, {cell, run}). Uses std::seed_seq, whose mixing
/// algorithm is fixed by the standard.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

}  // namespace swarmherd
