#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace flowshift {

enum class Direction { up, down, none };
std::string_view to_string(Direction d);

enum class WmwMode { automatic, exact, normal };

// Exact enumeration is used when n_before * n_after is at most this.
inline constexpr std::size_t kExactCellLimit = 400;

struct WmwResult {
  // One-sided p-values of the Mann-Whitney test on (after, before):
  // p_greater for "after tends to be larger", p_less for the reverse.
  double p_less = 0.5;
  double p_greater = 0.5;
  Direction direction = Direction::none;
  double u_after = 0.0;  // U statistic counting after > before pairs, ties as 1/2
  bool exact = false;
};

// Mann-Whitney U with midranks. Exact mode enumerates the permutation
// distribution of the tied ranks; normal mode uses the tie-corrected
// variance with a continuity correction. Throws Error(insufficient_data)
// for fewer than three values on a side, Error(internal) if both p-values
// fall below alpha.
WmwResult wmw_test(std::span<const double> before, std::span<const double> after, double alpha,
                   WmwMode mode = WmwMode::automatic);

double median(std::vector<double> values);
double mean(std::span<const double> values);

// Standard normal upper tail.
double normal_sf(double z);

}  // namespace flowshift
