// Copyright 2026 The ErosionLab Authors
// SPDX-License-Identifier: Apache-2.0

#include <set>

#include <gtest/gtest.h>

#include "erosion/rng.hpp"

namespace erosion {
namespace {

TEST(DeriveSeed, IsAPureFunctionOfItsKey) {
  EXPECT_EQ(derive_seed(7, "eval", 3), derive_seed(7, "eval", 3));
  EXPECT_NE(derive_seed(7, "eval", 3), derive_seed(7, "eval", 4));
  EXPECT_NE(derive_seed(7, "eval", 3), derive_seed(8, "eval", 3));
  EXPECT_NE(derive_seed(7, "eval", 3), derive_seed(7, "sft", 3));
}

TEST(DeriveSeed, CoordinatesAreNotInterchangeable) {
  EXPECT_NE(derive_seed(1, "x", 1, 2, 3), derive_seed(1, "x", 3, 2, 1));
  EXPECT_NE(derive_seed(1, "x", 0, 1), derive_seed(1, "x", 1, 0));
}

TEST(DeriveSeed, MatchesTheDocumentedMixing) {
  const std::uint64_t master = 42;
  std::uint64_t s = mix64(master ^ label_hash("tdsc.cand"));
  s = mix64(s ^ mix64(5 + 1));
  s = mix64(s ^ mix64(2 + 2));
  s = mix64(s ^ mix64(9 + 3));
  EXPECT_EQ(derive_seed(master, "tdsc.cand", 5, 2, 9), s);
}

TEST(DeriveSeed, NoCollisionsOverAGrid) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 40; ++a) {
    for (std::uint64_t b = 0; b < 40; ++b) seen.insert(derive_seed(1, "grid", a, b));
  }
  EXPECT_EQ(seen.size(), 1600u);
}

TEST(LabelHash, IsFnv1a) {
  EXPECT_EQ(label_hash(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(label_hash("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Rng, StreamIsReproducible) {
  Rng a = Rng::stream(3, "lbl", 1);
  Rng b = Rng::stream(3, "lbl", 1);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(Rng, UniformAndIndexStayInRange) {
  Rng rng(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ASSERT_LT(rng.index(7), 7u);
  }
}

}  // namespace
}  // namespace erosion
