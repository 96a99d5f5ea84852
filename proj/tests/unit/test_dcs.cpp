#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ddkit/dcs.hpp"
#include "ddkit/error.hpp"
#include "ddkit/random.hpp"
#include "testutil.hpp"

using namespace ddkit;

namespace {

// O(n^2) midranks: rank = #less + (#equal + 1) / 2.
std::vector<long double> brute_ranks(const std::vector<double>& v) {
  std::vector<long double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::size_t less = 0, equal = 0;
    for (double w : v) less += w < v[i], equal += w == v[i];
    r[i] = less + (equal + 1) / 2.0L;
  }
  return r;
}

double brute_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto a = brute_ranks(x), b = brute_ranks(y);
  long double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= a.size();
  mb /= b.size();
  long double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return double(sab / std::sqrt(saa * sbb));
}

DCSRecordSet records(const std::vector<double>& err, const std::vector<double>& loss,
                     const std::vector<std::size_t>& size) {
  DCSRecordSet s;
  s.objective = "test";
  for (std::size_t i = 0; i < err.size(); ++i)
    s.records.push_back({"s" + std::to_string(i), err[i], loss[i], size[i]});
  return s;
}

}  // namespace

TEST(Spearman, Examples) {
  std::vector<double> x{1, 2, 3};
  EXPECT_DOUBLE_EQ(spearman(x, std::vector<double>{10, 20, 30}), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, std::vector<double>{30, 20, 10}), -1.0);
  std::vector<double> xt{1, 2, 2, 3}, yt{1, 3, 2, 4};
  EXPECT_EQ(midranks(xt), (std::vector<double>{1, 2.5, 2.5, 4}));
  EXPECT_NEAR(spearman(xt, yt), brute_spearman(xt, yt), 1e-15);
  EXPECT_NEAR(spearman(xt, yt), 0.9486832980505138, 1e-15);
}

TEST(Spearman, Errors) {
  std::vector<double> x{1, 2, 3}, c{5, 5, 5};
  try {
    spearman(x, c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numerical);
  }
  EXPECT_THROW(spearman(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
  EXPECT_THROW(spearman(x, std::vector<double>{1, 2}), Error);
}

TEST(Spearman, MatchesBruteForceWithTies) {
  Rng r(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3 + r.below(18);
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = double(r.below(5)), y[i] = double(r.below(5));
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) continue;
    if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; })) continue;
    EXPECT_NEAR(spearman(x, y), brute_spearman(x, y), 1e-12);
  }
}

TEST(Spearman, MonotoneTransformInvariance) {
  Rng r(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(15), y(15), fx(15), gy(15);
    for (int i = 0; i < 15; ++i) {
      x[i] = r.uniform(-2, 2);
      y[i] = double(r.below(6));
      fx[i] = std::exp(3 * x[i]);
      gy[i] = std::pow(y[i] + 1.0, 3.0) - 7;
    }
    EXPECT_NEAR(spearman(x, y), spearman(fx, gy), 1e-12);
  }
}

TEST(Dcs, Examples) {
  const auto rep = dcs(records({0.1, 0.2, 0.3}, {1, 2, 3}, {5, 5, 5}), false);
  EXPECT_DOUBLE_EQ(rep.rho_raw, 1.0);
  EXPECT_FALSE(rep.rho_adjusted.has_value());
  EXPECT_EQ(rep.n, 3u);
}

TEST(Dcs, EqualSizesSkipAdjustmentWithNote) {
  const auto rep = dcs(records({0.1, 0.2, 0.3}, {1, 2, 3}, {5, 5, 5}), true);
  EXPECT_FALSE(rep.rho_adjusted.has_value());
  EXPECT_FALSE(rep.notes.empty());
}

TEST(Dcs, DuplicateRecordsKeepRho) {
  std::vector<double> e{0.3, 0.1, 0.4, 0.15, 0.5}, l{2, 1, 4, 1, 3};
  std::vector<std::size_t> s{1, 2, 3, 4, 5};
  const double once = dcs(records(e, l, s), false).rho_raw;
  auto e2 = e, l2 = l;
  auto s2 = s;
  e2.insert(e2.end(), e.begin(), e.end());
  l2.insert(l2.end(), l.begin(), l.end());
  s2.insert(s2.end(), s.begin(), s.end());
  EXPECT_NEAR(dcs(records(e2, l2, s2), false).rho_raw, once, 1e-12);
}

TEST(Dcs, SizeConfoundRemoved) {
  // errors and losses both track size; given size they are unrelated
  Rng r(31);
  std::vector<double> err, loss, noisy_loss;
  std::vector<std::size_t> size;
  for (int i = 0; i < 200; ++i) {
    const std::size_t sz = 10 + i;
    size.push_back(sz);
    loss.push_back(double(sz));
    noisy_loss.push_back(double(sz) + 5.0 * r.normal());
    err.push_back(std::clamp(0.9 - 0.003 * i + 0.01 * r.normal(), 0.0, 1.0));
  }
  const auto exact = dcs(records(err, loss, size), true);
  EXPECT_GT(std::abs(exact.rho_raw), 0.8);
  ASSERT_TRUE(exact.rho_adjusted.has_value());
  EXPECT_EQ(*exact.rho_adjusted, 0.0);
  const auto noisy = dcs(records(err, noisy_loss, size), true);
  EXPECT_GT(std::abs(noisy.rho_raw), 0.8);
  ASSERT_TRUE(noisy.rho_adjusted.has_value());
  EXPECT_LT(std::abs(*noisy.rho_adjusted), 0.1);
}

TEST(Dcs, PermutationInvariant) {
  Rng r(5);
  std::vector<double> e(12), l(12);
  std::vector<std::size_t> s(12);
  for (int i = 0; i < 12; ++i) e[i] = r.uniform(), l[i] = r.uniform(), s[i] = 1 + r.below(5);
  const auto a = dcs(records(e, l, s), true);
  std::vector<std::size_t> perm(12);
  std::iota(perm.begin(), perm.end(), 0);
  r.shuffle(perm);
  std::vector<double> pe, pl;
  std::vector<std::size_t> ps;
  for (auto i : perm) pe.push_back(e[i]), pl.push_back(l[i]), ps.push_back(s[i]);
  const auto b = dcs(records(pe, pl, ps), true);
  EXPECT_NEAR(a.rho_raw, b.rho_raw, 1e-12);
  EXPECT_NEAR(*a.rho_adjusted, *b.rho_adjusted, 1e-12);
}

TEST(Dcs, RecordValidation) {
  EXPECT_THROW(dcs(records({0.1, 0.2}, {1, 2}, {1, 2}), false), Error);
  EXPECT_THROW(dcs(records({0.1, 0.2, 1.2}, {1, 2, 3}, {1, 2, 3}), false), Error);
  auto dup = records({0.1, 0.2, 0.3}, {1, 2, 3}, {1, 2, 3});
  dup.records[2].subset_id = "s0";
  EXPECT_THROW(dcs(dup, false), Error);
}

TEST(Dcs, ReportJson) {
  DCSReport rep{0.5, std::nullopt, 4, ""};
  EXPECT_EQ(dcs_report_json(rep, "tm"),
            R"({"objective":"tm","n":4,"rho_raw":0.5,"rho_adjusted":null,"notes":""})");
}

TEST(ErrorTableStore, InsertReadIdempotentConflict) {
  test::TempDir d;
  ErrorTable t(d / "errors.csv");
  EXPECT_TRUE(t.read().empty());
  t.upsert("a", 0.25, 10);
  ASSERT_TRUE(t.find("a").has_value());
  EXPECT_EQ(t.find("a")->gen_error, 0.25);
  t.upsert("a", 0.25, 10);
  EXPECT_EQ(t.read().size(), 1u);
  t.upsert("a", 0.3, 10);
  EXPECT_EQ(t.find("a")->gen_error, 0.3);
  try {
    t.upsert("a", 0.3, 11);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::conflict);
  }
  EXPECT_EQ(test::slurp(d / "errors.csv"), "subset_id,gen_error,subset_size\na,0.3,10\n");
  EXPECT_THROW(t.upsert("b", 1.5, 10), Error);
}

TEST(ErrorTableStore, JoinRecords) {
  test::TempDir d;
  ErrorTable t(d / "errors.csv");
  t.upsert("a", 0.1, 1);
  t.upsert("b", 0.2, 2);
  t.upsert("c", 0.3, 3);
  io::write_atomic(d / "loss.csv", std::string_view("subset_id,loss\nc,3\na,1\nb,2\n"));
  const auto set = join_records(t.read(), d / "loss.csv", "bn");
  ASSERT_EQ(set.records.size(), 3u);
  EXPECT_DOUBLE_EQ(dcs(set, false).rho_raw, 1.0);
  io::write_atomic(d / "loss2.csv", std::string_view("subset_id,loss\nzz,3\n"));
  EXPECT_THROW(join_records(t.read(), d / "loss2.csv", "bn"), Error);
}
