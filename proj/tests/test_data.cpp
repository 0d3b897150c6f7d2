#include "mvak/data.hpp"
#include "mvak/error.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

using namespace mvak;
namespace fs = std::filesystem;

namespace {

fs::path write_tmp(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("mvak_test_" + name);
  std::ofstream(p) << text;
  return p;
}

Dataset labelled(Index l, int classes) {
  Dataset ds;
  ds.x = mvak::testing::randn(l, 2, 3);
  for (Index i = 0; i < l; ++i) ds.labels.push_back("c" + std::to_string(i % classes));
  return ds;
}

}  // namespace

TEST(Load, LabelColumn) {
  const auto p = write_tmp("a.csv", "1,2,a\n3,4,b\n5,6,a\n");
  LoadOptions o;
  o.label_column = 2;
  const Dataset ds = load_delimited(p, o);
  EXPECT_EQ(ds.rows(), 3);
  EXPECT_EQ(ds.dims(), 2);
  EXPECT_DOUBLE_EQ(ds.x(2, 1), 6.0);
  const LabelEncoding e = encode_labels(ds.labels);
  EXPECT_EQ(e.classes, (std::vector<std::string>{"a", "b"}));
}

TEST(Load, HeaderNameTargetsAndErrors) {
  const auto p = write_tmp("h.csv", "x1\tx2\tt\tcls\n1\t2\t0.5\tu\n3\t4\t1.5\tv\n");
  LoadOptions o;
  o.delimiter = '\t';
  o.header = true;
  o.label_name = "cls";
  o.target_columns = 1;
  const Dataset ds = load_delimited(p, o);
  EXPECT_EQ(ds.rows(), 2);
  EXPECT_EQ(ds.dims(), 2);
  EXPECT_DOUBLE_EQ(ds.y(1, 0), 1.5);
  EXPECT_EQ(ds.labels[1], "v");

  try {
    load_delimited(write_tmp("bad.csv", "1,2\n3,oops\n"));
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("oops"), std::string::npos);
    EXPECT_NE(msg.find("line 2"), std::string::npos);
    EXPECT_NE(msg.find("column 2"), std::string::npos);
  }
  EXPECT_THROW(load_delimited(write_tmp("rag.csv", "1,2\n3\n")), DataError);
  EXPECT_EQ(load_delimited(write_tmp("comment.csv", "# run 1\n1,2\n  # x\n3,4\n")).rows(), 2);
  EXPECT_THROW(load_delimited(write_tmp("empty.csv", "\n\n")), DataError);
  EXPECT_THROW(load_delimited(write_tmp("missing_dir/none.csv", "")), DataError);
}

TEST(Load, LabelFileAndRoundTrip) {
  const auto p = write_tmp("lf.csv", "1,2\n3,4\n");
  const auto lab = write_tmp("lf.txt", "yes\n no \n");
  LoadOptions o;
  o.label_file = lab;
  Dataset ds = load_delimited(p, o);
  EXPECT_EQ(ds.labels, (std::vector<std::string>{"yes", "no"}));
  ds.x(0, 0) = 0.1 + 0.2;
  const auto out = fs::temp_directory_path() / "mvak_test_rt.csv";
  save_delimited(out, ds);
  LoadOptions o2;
  o2.label_column = -1;
  const Dataset back = load_delimited(out, o2);
  EXPECT_EQ(back.x, ds.x);
  EXPECT_EQ(back.labels, ds.labels);
}

TEST(Encode, Examples) {
  const std::vector<std::string> a{"a", "c", "a"};
  const LabelEncoding e = encode_labels(a);
  Matrix want(3, 2);
  want << 1, 0, 0, 1, 1, 0;
  EXPECT_EQ(e.indicator, want);
  const std::vector<std::string> b{"0", "2", "1"};
  const LabelEncoding f = encode_labels(b);
  EXPECT_EQ(f.num_classes(), 3);
  EXPECT_EQ(f.indicator.row(1).sum(), 1.0);
  EXPECT_EQ(f.decode(f.codes), b);
  EXPECT_EQ(e.decode(e.codes), a);
  EXPECT_EQ(f.code_of("9"), -1);
  const std::vector<std::string> one{"x", "x"};
  EXPECT_THROW(encode_labels(one), DataError);
}

TEST(Center, Examples) {
  Matrix m(2, 1);
  m << 1, 3;
  auto [c, s] = center_fit_apply(m, false);
  EXPECT_DOUBLE_EQ(c(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(c(1, 0), 1.0);
  EXPECT_DOUBLE_EQ(s.mean(0), 2.0);

  Matrix k(2, 2);
  k << 1, 5, 1, 9;
  auto [z, t] = center_fit_apply(k, true);
  EXPECT_DOUBLE_EQ(t.scale(0), 1.0);
  EXPECT_NEAR(z.col(1).squaredNorm() / 1.0, 1.0, 1e-12);
  EXPECT_EQ(z.col(0), Vector::Zero(2));
}

TEST(Center, StatsReuseIsIdempotent) {
  const Matrix m = mvak::testing::randn(30, 4, 5) * 3.0;
  auto [c, s] = center_fit_apply(m, true);
  EXPECT_EQ(s.apply(m), c);
  EXPECT_LT(c.colwise().mean().cwiseAbs().maxCoeff(), 1e-10);
  for (Index j = 0; j < 4; ++j) EXPECT_NEAR(c.col(j).squaredNorm() / 29.0, 1.0, 1e-12);
  auto [c2, s2] = center_fit_apply(c, false);
  EXPECT_LT(mvak::testing::max_abs(c2 - c), 1e-14);
}

TEST(Split, DeterministicDisjointStratified) {
  const Dataset ds = labelled(10, 2);
  SplitOptions o;
  auto [tr, te] = split(ds, o, 7);
  EXPECT_EQ(tr.rows(), 6);
  EXPECT_EQ(te.rows(), 4);
  auto [tr2, te2] = split(ds, o, 7);
  EXPECT_EQ(tr.x, tr2.x);
  EXPECT_EQ(te.x, te2.x);
  std::set<double> seen;
  for (Index i = 0; i < 6; ++i) seen.insert(tr.x(i, 0));
  for (Index i = 0; i < 4; ++i) seen.insert(te.x(i, 0));
  EXPECT_EQ(seen.size(), 10u);
  EXPECT_EQ(std::count(tr.labels.begin(), tr.labels.end(), "c0"), 3);
}

TEST(Split, CapAndErrors) {
  const Dataset ds = labelled(1000, 3);
  SplitOptions o;
  o.max_train = 500;
  auto [tr, te] = split(ds, o, 1);
  EXPECT_EQ(tr.rows(), 500);
  EXPECT_EQ(te.rows(), 500);
  o.ratio = 1.0;
  EXPECT_THROW(split(ds, o, 1), UsageError);
  o = {};
  o.stratified = false;
  auto [a, b] = split(ds, o, 2);
  EXPECT_EQ(a.rows(), 600);
}

TEST(Kfold, ShapesAndPartition) {
  const auto loo = kfold(10, 10, 3);
  for (const auto& f : loo) {
    EXPECT_EQ(f.validation.size(), 1u);
    EXPECT_EQ(f.train.size(), 9u);
  }
  std::multiset<std::size_t> sizes;
  for (const auto& f : kfold(10, 3, 3)) sizes.insert(f.validation.size());
  EXPECT_EQ(sizes, (std::multiset<std::size_t>{3, 3, 4}));
  EXPECT_THROW(kfold(10, 0, 1), UsageError);
  EXPECT_THROW(kfold(10, 11, 1), UsageError);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::vector<int> hit(37, 0);
    for (const auto& f : kfold(37, 5, seed))
      for (Index i : f.validation) ++hit[static_cast<std::size_t>(i)];
    for (int h : hit) EXPECT_EQ(h, 1);
  }
}
