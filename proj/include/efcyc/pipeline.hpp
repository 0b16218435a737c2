#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <future>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "efcyc/chain.hpp"
#include "efcyc/estimate.hpp"
#include "efcyc/folner.hpp"
#include "efcyc/twisted.hpp"

namespace efcyc {

/// Inputs of the efficient-cycle recipe: a cycle c, near-minimal cycles z_m
/// over Q and fillings b_m over Gamma with pushforward(boundary(b_m)) =
/// z_m - c-bar. With `adaptive` set, the Folner sequence is replaced by one
/// of the subgroup of N generated by the decomposition's S.
template <class ChainT>
struct BasicRecipeInput {
  AmenableExtension ext;
  ChainT c;
  std::vector<ChainT> z;
  std::vector<ChainT> b;
  FolnerSequence folner;
  bool adaptive = false;
  Rational epsilon = 0;  // only used with twisted coefficients
};

using RecipeInput = BasicRecipeInput<Chain>;
using TwistedRecipeInput = BasicRecipeInput<TwistedChain>;

struct ConvergenceRow {
  std::int64_t k = 0;
  std::size_t F_size = 0;
  Rational ratio;
  Rational norm;
  Rational bound;

  friend bool operator==(const ConvergenceRow&, const ConvergenceRow&) = default;
};

namespace detail {

struct RemainderData {
  std::vector<GroupElement> S;
  Rational K;
  Rational epsilon;
};

inline RemainderData remainder_data(const AmenableExtension& ext, const Chain& x, const Rational&) {
  auto [head, tail] = epsilon_split(ext, x);
  SigmaDecomposition d = sigma_decompose(ext, tail);
  return {std::move(d.S), d.K, 0};
}

inline RemainderData remainder_data(const AmenableExtension& ext, const TwistedChain& x, const Rational& epsilon) {
  const TwistedSplit split = twisted_epsilon_split(ext, x, epsilon);
  TwistedSigmaDecomposition d = twisted_sigma_decompose(ext, split.tail);
  return {std::move(d.S), d.K, epsilon};
}

template <class ChainT>
void validate_recipe(const BasicRecipeInput<ChainT>& in) {
  if (!(in.c.group() == in.ext.group())) {
    fail(ErrorCode::inconsistent_groups, "cycle lives over " + in.c.group().to_string() + ", extension is " +
                                             in.ext.to_string());
  }
  if (!is_cycle(in.c)) fail(ErrorCode::non_cycle, "recipe input is not a cycle: boundary = " + to_string(boundary(in.c)));
  if (in.z.size() != in.b.size()) {
    fail(ErrorCode::malformed_input, std::to_string(in.z.size()) + " cycles z_m but " + std::to_string(in.b.size()) +
                                         " fillings b_m");
  }
  const ChainT cbar = pushforward(in.ext, in.c);
  for (std::size_t m = 0; m < in.b.size(); ++m) {
    if (in.b[m].degree() != in.c.degree() + 1) fail(ErrorCode::degree_mismatch, "filling b_" + std::to_string(m) + " has the wrong degree");
    if (in.z[m].degree() != in.c.degree()) fail(ErrorCode::degree_mismatch, "z_" + std::to_string(m) + " has the wrong degree");
    const ChainT residual = pushforward(in.ext, boundary(in.b[m])) - in.z[m] + cbar;
    if (!residual.is_zero()) {
      fail(ErrorCode::filling_mismatch, "filling b_" + std::to_string(m) + " misses by " + to_string(residual));
    }
  }
}

template <class ChainT>
void require_index(const BasicRecipeInput<ChainT>& in, std::size_t m) {
  if (m >= in.b.size()) {
    fail(ErrorCode::malformed_input, "no filling with index " + std::to_string(m) + " (" + std::to_string(in.b.size()) +
                                         " provided)");
  }
}

}  // namespace detail

/// Checks the recipe invariants and returns the input unchanged.
template <class ChainT>
BasicRecipeInput<ChainT> make_recipe(BasicRecipeInput<ChainT> in) {
  detail::validate_recipe(in);
  return in;
}

/// c + boundary(b_m).
template <class ChainT>
ChainT corrected_cycle(const BasicRecipeInput<ChainT>& in, std::size_t m) {
  detail::require_index(in, m);
  return in.c + boundary(in.b[m]);
}

template <class ChainT>
FolnerSequence folner_for(const BasicRecipeInput<ChainT>& in, std::size_t m) {
  if (!in.adaptive) return in.folner;
  const auto data = detail::remainder_data(in.ext, corrected_cycle(in, m), in.epsilon);
  return FolnerSequence::adaptive(in.ext, data.S);
}

/// c_{k,m} = psi_k(c + boundary(b_m)).
template <class ChainT>
ChainT efficient_cycle(const BasicRecipeInput<ChainT>& in, std::int64_t k, std::size_t m) {
  detail::validate_recipe(in);
  return average(in.ext, corrected_cycle(in, m), folner_for(in, m).at(k));
}

/// Rows k = 1..kmax of |psi_k(c + boundary(b_m))|_1 against the explicit
/// bound |z_m|_1 + epsilon + K |boundary_S F_k| / |F_k|.
template <class ChainT>
std::vector<ConvergenceRow> convergence_experiment(const BasicRecipeInput<ChainT>& in, std::int64_t kmax,
                                                   std::size_t m, unsigned threads = 0) {
  detail::validate_recipe(in);
  if (kmax < 1) fail(ErrorCode::malformed_input, "kmax must be at least 1");
  const ChainT x = corrected_cycle(in, m);
  const detail::RemainderData data = detail::remainder_data(in.ext, x, in.epsilon);
  const FolnerSequence seq = in.adaptive ? FolnerSequence::adaptive(in.ext, data.S) : in.folner;
  const Rational znorm = l1_norm(in.z[m]);
  auto row = [&](std::int64_t k) {
    const FolnerSet F = seq.at(k);
    ConvergenceRow r;
    r.k = k;
    r.F_size = F.size();
    r.ratio = boundary_ratio(in.ext.group(), F.elements(), data.S);
    r.norm = averaged_norm(in.ext, x, F);
    r.bound = znorm + data.epsilon + data.K * r.ratio;
    return r;
  };
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  std::vector<ConvergenceRow> rows(static_cast<std::size_t>(kmax));
  // largest k first: those rows dominate the running time
  std::vector<std::future<void>> workers;
  std::atomic<std::int64_t> next{kmax};
  for (unsigned t = 0; t < threads; ++t) {
    workers.push_back(std::async(std::launch::async, [&] {
      for (std::int64_t k = next--; k >= 1; k = next--) rows[static_cast<std::size_t>(k - 1)] = row(k);
    }));
  }
  for (auto& w : workers) w.get();
  return rows;
}

}  // namespace efcyc
