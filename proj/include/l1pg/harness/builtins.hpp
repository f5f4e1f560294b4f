#pragma once

// Builtin desk-scale configurations. configs/<name>.ini holds the same text.

#include "l1pg/harness/config.hpp"

#include <array>
#include <string>
#include <string_view>

namespace l1pg::harness {

struct BuiltinConfig {
  std::string_view name;
  std::string_view description;
  std::string_view text;
};

inline constexpr std::array<BuiltinConfig, 3> builtin_configs{{
    {"partial-dft",
     "orthonormal partial DFT, 128 of 256 rows, 10-sparse signal",
     R"(# Partial DFT: 128 of the 256 orthonormal real Fourier rows. The rows stay
# orthonormal (no rescaling), so the steepest-descent ratio is exactly 1.
seed = 1
reference = oracle

[problem]
operator = partial-dft
rows = 128
cols = 256
sparsity = 10
noise_sigma = 0.01
tau_rule = fraction
tau_fraction = 0.05

[solver.ista]
kind = thresholded-landweber
max_iter = 20000
tol = 1e-10

[solver.psd]
kind = projected-gradient
step = steepest-descent-with-b
max_iter = 20000
tol = 1e-10

[solver.pl]
kind = projected-landweber
max_iter = 20000
tol = 1e-10
)"},
    {"rank-structured",
     "192x256, top singular value 0.99, tail evenly spaced in [0.01, 0.11]",
     R"(# Rank-structured operator: one singular value 0.99, the other 191 evenly
# spaced between 0.11 and 0.01. The penalty is chosen so that
# D(x_bar) = rows * sigma^2.
seed = 2
reference = oracle

[problem]
operator = rank-structured
rows = 192
cols = 256
top_singular_value = 0.99
tail_max = 0.11
tail_min = 0.01
sparsity = 20
noise_sigma = 0.01
tau_rule = discrepancy

[solver.ista]
kind = thresholded-landweber
max_iter = 200000
tol = 1e-10

[solver.psd]
kind = projected-gradient
step = steepest-descent-with-b
max_iter = 50000
tol = 1e-10

[solver.pl]
kind = projected-landweber
max_iter = 200000
tol = 1e-10

[solver.relaxed]
kind = relaxed-radius
step = steepest-descent-with-b
steps = 3000
)"},
    {"tomography",
     "160 random rays through a 16x16 grid, noise-matched penalty",
     R"(# Ill-conditioned ray-sum operator: 160 straight rays through a 16x16 pixel
# grid. The penalty is matched to the noise level, D(x_bar) = rows * sigma^2.
# psd takes the raw steepest-descent step, which can break (B2) on this
# operator; psd-b backtracks until (B2) holds.
seed = 3
reference = oracle

[problem]
operator = tomography
rows = 160
grid = 16
cols = 256
sparsity = 12
noise_sigma = 0.05
tau_rule = discrepancy

[solver.ista]
kind = thresholded-landweber
max_iter = 200000
tol = 1e-10

[solver.psd]
kind = projected-gradient
step = steepest-descent
enforce_b2 = false
max_iter = 100000
tol = 1e-10

[solver.psd-b]
kind = projected-gradient
step = steepest-descent-with-b
max_iter = 100000
tol = 1e-10

[solver.pl]
kind = projected-landweber
max_iter = 200000
tol = 1e-10
)"},
}};

inline const BuiltinConfig *find_builtin(std::string_view name) {
  for (const auto &b : builtin_configs)
    if (b.name == name) return &b;
  return nullptr;
}

inline BenchmarkConfig builtin_config(std::string_view name) {
  const auto *b = find_builtin(name);
  if (!b) throw ConfigError("unknown builtin config '" + std::string(name) + "'");
  return parse_config_string(std::string(b->text));
}

} // namespace l1pg::harness
