#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dabound/dataset.hpp"
#include "dabound/rng.hpp"
#include "test_util.hpp"

using namespace dab;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
  auto p = fs::temp_directory_path() / "dabound_test_datasets";
  fs::create_directories(p);
  return p;
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

}  // namespace

TEST_CASE("csv load: uniform weights by default") {
  auto p = tmp_dir() / "basic.csv";
  write_file(p, "x0,x1,label\n0,0,0\n1,0,1\n0,1,0\n1,1,1\n");
  auto ds = load_dataset(p.string());
  CHECK(ds.dim == 2);
  CHECK(ds.num_classes == 2);
  CHECK(ds.size() == 4);
  for (double w : ds.weights) CHECK(w == doctest::Approx(0.25));
}

TEST_CASE("csv load: explicit weights preserved exactly") {
  auto p = tmp_dir() / "weighted.csv";
  write_file(p, "x0,label,weight\n0,0,0.5\n1,1,0.25\n2,1,0.25\n");
  auto ds = load_dataset(p.string());
  CHECK(ds.weights[0] == 0.5);
  CHECK(ds.weights[1] == 0.25);
  CHECK(ds.weights[2] == 0.25);
}

TEST_CASE("csv load: wrong column count names the line") {
  auto p = tmp_dir() / "badrow.csv";
  write_file(p, "x0,x1,label\n0,0,0\n1,2,3,1\n");
  CHECK_THROWS_WITH_AS(load_dataset(p.string()), doctest::Contains("line 3"), ValidationError);
}

TEST_CASE("csv load: malformed numbers and labels") {
  auto p = tmp_dir() / "badnum.csv";
  write_file(p, "x0,label\nnope,0\n");
  CHECK_THROWS_AS(load_dataset(p.string()), ValidationError);
  write_file(p, "x0,label\n0.5,1.5\n");
  CHECK_THROWS_AS(load_dataset(p.string()), ValidationError);
  write_file(p, "x0,label,weight\n0.5,0,-0.25\n");
  CHECK_THROWS_AS(load_dataset(p.string()), ValidationError);
}

TEST_CASE("save/load round trip is bit exact") {
  Rng rng(7);
  LabeledDataset ds = dabtest::random_dataset(rng, 23, 3, 4);
  auto p = tmp_dir() / "roundtrip.csv";
  save_dataset(ds, p.string());
  auto back = load_dataset(p.string());
  REQUIRE(back.size() == ds.size());
  CHECK(back.xs == ds.xs);
  CHECK(back.labels == ds.labels);
  CHECK(back.weights == ds.weights);

  // weight order preserved
  for (std::size_t i = 0; i < ds.size(); ++i) CHECK(back.weights[i] == ds.weights[i]);
}

TEST_CASE("save to unwritable path fails") {
  Rng rng(7);
  LabeledDataset ds = dabtest::random_dataset(rng, 4, 1, 2);
  CHECK_THROWS_AS(save_dataset(ds, "/nonexistent_dir_zz/x.csv"), ValidationError);
}

TEST_CASE("instance manifest round trip") {
  Rng rng(9);
  TransferInstance inst(dabtest::random_dataset(rng, 12, 2, 3), dabtest::random_dataset(rng, 9, 2, 3),
                        ShiftKind::prior_shift, 42);
  auto dir = tmp_dir() / "inst";
  save_instance(inst, dir.string(), "case");
  auto back = load_instance((dir / "case.json").string());
  CHECK(back.shift_kind == ShiftKind::prior_shift);
  CHECK(back.seed == 42);
  CHECK(back.source.xs == inst.source.xs);
  CHECK(back.target_eval().xs == inst.target_eval().xs);
}

TEST_CASE("resample_prior: identity ratios keep the dataset") {
  auto ds = dabtest::make_dataset({{0.0}, {1.0}, {2.0}, {3.0}}, {0, 1, 0, 1});
  auto out = resample_prior(ds, std::vector<double>{0.5, 0.5}, 0);
  CHECK(out.weights == ds.weights);
  CHECK(out.xs == ds.xs);
}

TEST_CASE("resample_prior: ramp ratios hit requested masses and keep conditionals") {
  Rng rng(11);
  LabeledDataset ds;
  ds.dim = 1;
  ds.num_classes = 10;
  int n = 0;
  for (int c = 0; c < 10; ++c)
    for (int k = 0; k < 7; ++k) {
      ds.xs.push_back(rng.normal() + c);
      ds.labels.push_back(c);
      ++n;
    }
  ds.weights.assign(n, 1.0 / n);

  std::vector<double> ratios(10);
  double sum = 0.0;
  for (int c = 0; c < 10; ++c) {
    ratios[c] = 0.05 + (0.20 - 0.05) * c / 9.0;
    sum += ratios[c];
  }
  for (double& r : ratios) r /= sum;

  auto out = resample_prior(ds, ratios, 0);
  for (int c = 0; c < 10; ++c) CHECK(std::abs(out.class_mass(c) - ratios[c]) < 1e-9);
  // per-class point multisets untouched
  CHECK(out.xs == ds.xs);
  CHECK(out.labels == ds.labels);
  double mass = 0.0;
  for (double w : out.weights) mass += w;
  CHECK(std::abs(mass - 1.0) < 1e-12);
}

TEST_CASE("resample_prior: degenerate ratio moves all mass") {
  auto ds = dabtest::make_dataset({{0.0}, {1.0}, {2.0}, {3.0}}, {0, 1, 0, 1});
  auto out = resample_prior(ds, std::vector<double>{1.0, 0.0}, 0);
  CHECK(out.class_mass(0) == doctest::Approx(1.0));
  CHECK(out.class_mass(1) == 0.0);
  CHECK(out.xs == ds.xs);  // points kept, only reweighted
}

TEST_CASE("resample_prior: mass on absent class fails") {
  auto ds = dabtest::make_dataset({{0.0}, {1.0}}, {0, 0}, {}, 2);
  CHECK_THROWS_AS(resample_prior(ds, std::vector<double>{0.5, 0.5}, 0), ValidationError);
}

TEST_CASE("split: sizes, renormalization, determinism") {
  Rng rng(13);
  auto ds = dabtest::random_dataset(rng, 10, 2, 2);
  auto [a, b] = split(ds, 0.5, 99);
  CHECK(a.size() == 5);
  CHECK(b.size() == 5);
  double ma = 0.0, mb = 0.0;
  for (double w : a.weights) ma += w;
  for (double w : b.weights) mb += w;
  CHECK(std::abs(ma - 1.0) < 1e-12);
  CHECK(std::abs(mb - 1.0) < 1e-12);

  auto [a2, b2] = split(ds, 0.5, 99);
  CHECK(a.xs == a2.xs);
  CHECK(b.labels == b2.labels);

  CHECK_THROWS_AS(split(ds, 0.999999, 1), ValidationError);
  auto two = dabtest::make_dataset({{0.0}, {1.0}}, {0, 1});
  CHECK_THROWS_AS(split(two, 0.999, 1), ValidationError);
}

TEST_CASE("unlabeled view carries points and weights only") {
  auto ds = dabtest::make_dataset({{0.0}, {1.0}}, {0, 1}, {0.75, 0.25});
  auto v = unlabeled(ds);
  CHECK(v.size() == 2);
  CHECK(v.weights[0] == 0.75);
  CHECK(v.point(1)[0] == 1.0);
}
