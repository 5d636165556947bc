#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"

using namespace gridctl;

namespace {

// Independent count: all 2^n assignments, canonicalized by swapping so that
// element 0 sits on busbar 1, validity checked per busbar. The all-busbar-1
// base is kept unconditionally.
std::set<SubConfig> oracle_configs(int n_lines, int n_inj, bool n1) {
  const int n = n_lines + n_inj;
  std::set<SubConfig> out;
  for (int mask = 0; mask < (1 << n); ++mask) {
    SubConfig c(n);
    // xor with bit 0 swaps busbars whenever element 0 starts on busbar 2
    for (int i = 0; i < n; ++i) c[i] = ((mask >> i) ^ mask) & 1 ? 2 : 1;
    bool ok = true;
    for (int bus = 1; bus <= 2; ++bus) {
      int lines = 0, inj = 0;
      for (int i = 0; i < n; ++i)
        if (c[i] == bus) (i < n_lines ? lines : inj)++;
      if (inj > 0 && lines == 0) ok = false;
      if (n1 && lines == 1) ok = false;
    }
    if (ok || c == SubConfig(n, 1)) out.insert(c);
  }
  return out;
}

}  // namespace

TEST(ActionSpace, HandCountedExamples) {
  EXPECT_EQ(enumerate_sub_configs(3, 1, ActionSpaceMode::N1Secure).size(), 1u);
  EXPECT_EQ(enumerate_sub_configs(4, 0, ActionSpaceMode::N1Secure).size(), 4u);
  EXPECT_EQ(enumerate_sub_configs(2, 1, ActionSpaceMode::SymmetryFiltered).size(), 3u);
  const auto only = enumerate_sub_configs(3, 1, ActionSpaceMode::N1Secure);
  EXPECT_EQ(only.front(), SubConfig(4, 1));
  // a single line cannot be split, the base alone remains
  EXPECT_EQ(enumerate_sub_configs(1, 2, ActionSpaceMode::N1Secure), std::vector<SubConfig>{SubConfig(3, 1)});
}

TEST(ActionSpace, ClosedFormArithmetic) {
  EXPECT_EQ(closed_form::alpha(4), 8);
  EXPECT_EQ(closed_form::gamma(1), 1);
  EXPECT_EQ(closed_form::epsilon(1, 3), 6);
  EXPECT_EQ(closed_form_count(3, 1, ActionSpaceMode::N1Secure), 1);
  EXPECT_EQ(closed_form::epsilon(0, 2), 1);
  EXPECT_EQ(closed_form::epsilon(0, 1), 0);
  EXPECT_THROW(closed_form_count(0, 2, ActionSpaceMode::SymmetryFiltered), std::domain_error);
}

TEST(ActionSpace, EnumerationMatchesClosedFormAndOracle) {
  for (int nl = 1; nl <= 7; ++nl)
    for (int ni = 0; ni <= 4; ++ni)
      for (auto mode : {ActionSpaceMode::SymmetryFiltered, ActionSpaceMode::N1Secure}) {
        const auto cfgs = enumerate_sub_configs(nl, ni, mode);
        const auto n = static_cast<std::int64_t>(cfgs.size());
        EXPECT_EQ(n, closed_form_count(nl, ni, mode)) << nl << "," << ni << "," << to_string(mode);
        const auto oracle = oracle_configs(nl, ni, mode == ActionSpaceMode::N1Secure);
        EXPECT_EQ(std::set<SubConfig>(cfgs.begin(), cfgs.end()), oracle);
      }
}

TEST(ActionSpace, N1ListsAreSubsetsOfSymmetryLists) {
  for (int nl = 1; nl <= 6; ++nl)
    for (int ni = 0; ni <= 3; ++ni) {
      const auto sym = enumerate_sub_configs(nl, ni, ActionSpaceMode::SymmetryFiltered);
      const std::set<SubConfig> s(sym.begin(), sym.end());
      for (const auto& c : enumerate_sub_configs(nl, ni, ActionSpaceMode::N1Secure)) EXPECT_TRUE(s.count(c));
    }
}

TEST(ActionSpace, NoTwoConfigsAreBusbarSwaps) {
  for (int nl = 1; nl <= 6; ++nl)
    for (int ni = 0; ni <= 3; ++ni) {
      const auto cfgs = enumerate_sub_configs(nl, ni, ActionSpaceMode::SymmetryFiltered);
      std::set<SubConfig> s(cfgs.begin(), cfgs.end());
      EXPECT_EQ(s.size(), cfgs.size());
      for (const auto& c : cfgs) {
        SubConfig sw = c;
        for (auto& b : sw) b = b == 1 ? 2 : 1;
        EXPECT_FALSE(s.count(sw));
      }
    }
}

TEST(ActionSpace, StructuralN1SurvivesAnySingleLineLoss) {
  for (int nl = 1; nl <= 6; ++nl)
    for (int ni = 1; ni <= 3; ++ni)
      for (const auto& c : enumerate_sub_configs(nl, ni, ActionSpaceMode::N1Secure)) {
        if (c == SubConfig(nl + ni, 1)) continue;
        for (int lost = 0; lost < nl; ++lost)
          for (int bus = 1; bus <= 2; ++bus) {
            int lines = 0, inj = 0;
            for (int i = 0; i < nl + ni; ++i)
              if (c[i] == bus && i != lost) (i < nl ? lines : inj)++;
            EXPECT_FALSE(inj > 0 && lines == 0);
          }
      }
}

TEST(ActionSpace, BundledGridTotals) {
  const auto c5 = testutil::bundled("case5");
  const auto c14 = testutil::bundled("case14");
  EXPECT_EQ(build_action_space(c5, ActionSpaceMode::SymmetryFiltered).size(), 58);
  EXPECT_EQ(build_action_space(c5, ActionSpaceMode::N1Secure).size(), 24);
  EXPECT_EQ(build_action_space(c14, ActionSpaceMode::SymmetryFiltered).size(), 178);
  EXPECT_EQ(build_action_space(c14, ActionSpaceMode::N1Secure).size(), 73);
  EXPECT_EQ(count_global_topologies(c5, ActionSpaceMode::SymmetryFiltered), 31320u);
  EXPECT_EQ(count_global_topologies(c5, ActionSpaceMode::N1Secure), 364u);
  EXPECT_EQ(count_global_topologies(c14, ActionSpaceMode::N1Secure), 334425u);
  const double t14 = static_cast<double>(count_global_topologies(c14, ActionSpaceMode::SymmetryFiltered));
  EXPECT_NEAR(t14, 3.92e11, 0.01e11);
}

TEST(ActionSpace, RegionsCoverActionsAndContainsChecksMembership) {
  const auto g = testutil::bundled("case5");
  const auto sp = build_action_space(g, ActionSpaceMode::N1Secure);
  std::size_t total = 0;
  for (int r = 0; r < sp.n_regions(); ++r) {
    for (int idx : sp.region_actions[r]) EXPECT_EQ(sp.actions[idx].sub, sp.regions[r]);
    total += sp.region_actions[r].size();
  }
  EXPECT_EQ(total, sp.actions.size());
  for (const auto& a : sp.actions) EXPECT_TRUE(sp.contains(a));
  EXPECT_TRUE(sp.contains(TopologyAction::do_nothing()));
  for (int s = 0; s < g.n_subs(); ++s) {
    const int n = g.substations[s].n_elements();
    if (sp.per_sub[s].size() < 2) EXPECT_FALSE(sp.contains({s, SubConfig(n, 1)}));
    EXPECT_FALSE(sp.contains({s, SubConfig(n, 2)}));  // busbar swap image of the base
  }
  EXPECT_FALSE(sp.contains({g.n_subs(), SubConfig(2, 1)}));
}
