#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "metawsd/corpus.hpp"
#include "metawsd/matrix.hpp"
#include "metawsd/nn.hpp"

namespace metawsd {

/// Trained parameters of one run. Meta-learners store the shared block
/// (weight, bias); the NE-Baseline adds its output layer and sense table.
struct Checkpoint {
  std::string method;
  std::uint64_t seed = 0;
  Activation activation = Activation::relu;
  std::vector<Matrix> tensors;
  std::vector<SenseKey> senses;

  bool operator==(const Checkpoint&) const = default;
};

// Layout (little endian): "MWCK", u32 version, u16+bytes method, u64 seed,
// u8 activation, u32 tensor count, per tensor u32 rows, u32 cols, f64 data,
// u32 sense count, per sense u16+bytes word, u16+bytes sense.
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace metawsd
