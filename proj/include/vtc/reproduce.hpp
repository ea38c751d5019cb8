#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace vtc {

struct ReproduceOptions {
  /// "all", "affine", "kink" or "flat".
  std::string example = "all";
  std::size_t grid = 2000;
  std::uint64_t seed = 0;
  /// Output directory; nothing is written when empty.
  std::filesystem::path out;
};

struct ReproRow {
  std::string group;
  std::string name;
  double observed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct ReproduceSummary {
  std::vector<ReproRow> rows;

  bool all_pass() const;
  /// Fixed-width pass/fail table.
  std::string table() const;
};

/// The three worked examples plus the closed-form oracle checks, in
/// deterministic Euler mode on an N-cell grid (and a small seeded Monte
/// Carlo run for the stochastic duality row). Throws RegistryError for an
/// unknown example name.
ReproduceSummary reproduce_all(const ReproduceOptions& options = {});

}  // namespace vtc
