#include <gtest/gtest.h>

#include <set>

#include "edusim/module_set.hpp"

using edusim::ModuleSet;

TEST(ModuleSet, BasicOperations) {
  ModuleSet a;
  EXPECT_TRUE(a.empty());
  a.insert(0);
  a.insert(3);
  EXPECT_EQ(a.size(), 2u);
  EXPECT_TRUE(a.contains(3));
  EXPECT_FALSE(a.contains(1));
  const ModuleSet b = ModuleSet::single(3) | ModuleSet::single(5);
  EXPECT_EQ((a & b), ModuleSet::single(3));
  EXPECT_EQ((a - b), ModuleSet::single(0));
  EXPECT_TRUE(ModuleSet::single(3).subset_of(a));
  EXPECT_TRUE(ModuleSet::single(1).disjoint(a));
  EXPECT_EQ(a.indices(), (std::vector<std::size_t>{0, 3}));
}

TEST(ModuleSet, HighestIndex) {
  ModuleSet s = ModuleSet::single(63);
  EXPECT_TRUE(s.contains(63));
  EXPECT_EQ(s.indices(), std::vector<std::size_t>{63});
}

TEST(ModuleSet, LexOrderComparesSortedIndexSequences) {
  auto set = [](std::initializer_list<std::size_t> xs) {
    ModuleSet s;
    for (auto x : xs) s.insert(x);
    return s;
  };
  // {0} < {0,1} < {0,2} < {1}
  EXPECT_TRUE(lex_compare(set({0}), set({0, 1})) < 0);
  EXPECT_TRUE(lex_compare(set({0, 1}), set({0, 2})) < 0);
  EXPECT_TRUE(lex_compare(set({0, 2}), set({1})) < 0);
  EXPECT_TRUE(lex_compare(set({1, 4}), set({1, 4})) == 0);
  EXPECT_TRUE(lex_compare(ModuleSet{}, set({0})) < 0);
}

TEST(ModuleSet, ForEachSubsetVisitsEverySubsetOnce) {
  const ModuleSet u = ModuleSet::single(1) | ModuleSet::single(4) | ModuleSet::single(6);
  std::set<std::uint64_t> seen;
  for_each_subset(u, [&](ModuleSet s) {
    EXPECT_TRUE(s.subset_of(u));
    EXPECT_TRUE(seen.insert(s.bits()).second);
  });
  EXPECT_EQ(seen.size(), 8u);
}
