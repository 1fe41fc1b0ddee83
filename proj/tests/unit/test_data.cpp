#include "doctest.h"

#include "rfgap/data.hpp"
#include "rfgap/eval.hpp"

#include <cmath>
#include <sstream>

using namespace rfgap;

namespace {

Dataset parse(const std::string& text, ColumnRef label = std::string("y"),
              LabelKind kind = LabelKind::classification, CsvOptions options = {}) {
  std::istringstream in(text);
  return parse_csv(in, label, kind, options);
}

const char* kIris = RFGAP_TEST_DATA "/iris.csv";
const char* kWine = RFGAP_TEST_DATA "/wine.csv";

}  // namespace

TEST_CASE("load_csv drops rows with a missing cell") {
  const Dataset d = parse("a,b,y\n1,2,x\n3,,x\n5,6,z\n7,8,x\n");
  CHECK(d.n() == 3);
  CHECK(d.p() == 2);
  CHECK(d.features(1, 0) == 5.0);
}

TEST_CASE("missing markers follow the UCI convention") {
  CHECK(is_missing_marker(""));
  CHECK(is_missing_marker("NA"));
  CHECK(is_missing_marker("?"));
  CHECK_FALSE(is_missing_marker("0"));
  const Dataset d = parse("a,y\n1,x\nNA,x\n?,z\n2,z\n");
  CHECK(d.n() == 2);
}

TEST_CASE("labels are numbered by first appearance and map back to strings") {
  const Dataset d = parse("a,y\n1,dog\n2,cat\n3,dog\n4,emu\n");
  CHECK(d.classes == std::vector<int>{0, 1, 0, 2});
  REQUIRE(d.n_classes() == 3);
  CHECK(d.class_names[0] == "dog");
  CHECK(d.class_names[1] == "cat");
  CHECK(d.class_names[2] == "emu");
}

TEST_CASE("a class that only appears on dropped rows does not get an id") {
  const Dataset d = parse("a,y\n,ghost\n1,dog\n2,cat\n");
  CHECK(d.n_classes() == 2);
  CHECK(d.class_names[0] == "dog");
}

TEST_CASE("label column by index and regression labels") {
  const Dataset d = parse("a,b,c\n1,2,0.5\n3,4,1.5\n", std::size_t{2}, LabelKind::regression);
  CHECK(d.label_kind == LabelKind::regression);
  CHECK(d.targets == std::vector<double>{0.5, 1.5});
  CHECK(d.feature_names == std::vector<std::string>{"a", "b"});
}

TEST_CASE("load_csv errors") {
  CHECK_THROWS_AS(parse("a,b\n1,2\n3,4\n"), std::invalid_argument);  // no label column y
  CHECK_THROWS_AS(parse("a,y\n1,x\nfoo,y\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse("a,y\n,x\nNA,y\n"), std::invalid_argument);  // zero usable rows
  CHECK_THROWS_AS(parse("a,y\n1,x\n2,x\n", std::string("y"), LabelKind::classification,
                        CsvOptions{{"nope"}}),
                  std::invalid_argument);
}

TEST_CASE("drop columns and quoted fields") {
  const Dataset d = parse("id,\"a\",y\n10,1,\"p, q\"\n11,2,r\n", std::string("y"),
                          LabelKind::classification, CsvOptions{{"id"}});
  CHECK(d.p() == 1);
  CHECK(d.class_names[0] == "p, q");
}

TEST_CASE("Iris-format CSV has 150 rows and 4 features") {
  const Dataset d = load_csv(kIris, std::string("species"), LabelKind::classification);
  CHECK(d.n() == 150);
  CHECK(d.p() == 4);
  CHECK(d.n_classes() == 3);
  const Dataset w = load_csv(kWine, std::string("cultivar"), LabelKind::classification);
  CHECK(w.n() == 178);
  CHECK(w.p() == 13);
}

TEST_CASE("write_csv round trips") {
  const Dataset d = synthesize_blobs(5, 2, 1, 2.0, 3);
  std::ostringstream out;
  write_csv(d, out);
  std::istringstream in(out.str());
  const Dataset back = parse_csv(in, d.label_name, LabelKind::classification);
  CHECK(back.features == d.features);
  CHECK(back.classes == d.classes);
  CHECK(back.class_names == d.class_names);
}

TEST_CASE("zscore_normalize uses the population convention") {
  Dataset d;
  d.features = Matrix{{1.0, 5.0}, {3.0, 5.0}};
  d.classes = {0, 1};
  d.class_names = {"a", "b"};
  d.feature_names = {"x", "const"};
  auto [z, record] = zscore_normalize(d);
  CHECK(record.convention == StdConvention::population);
  REQUIRE(z.p() == 1);
  CHECK(z.features(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(z.features(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(record.dropped_columns == std::vector<std::string>{"const"});
  CHECK(record.kept_columns == std::vector<Index>{0});
  for (double s : record.stddev) CHECK(s > 0.0);
}

TEST_CASE("zscore_normalize: moments, idempotence, all-constant error") {
  const Dataset d = load_csv(kWine, std::string("cultivar"), LabelKind::classification);
  auto [z, record] = zscore_normalize(d);
  for (Index c = 0; c < z.p(); ++c) {
    const double mean = z.features.col(c).mean();
    const double sd = std::sqrt((z.features.col(c).array() - mean).square().mean());
    CHECK(std::abs(mean) <= 1e-10);
    CHECK(std::abs(sd - 1.0) <= 1e-10);
  }
  auto [zz, record2] = zscore_normalize(z);
  CHECK((zz.features - z.features).cwiseAbs().maxCoeff() <= 1e-10);

  Dataset flat;
  flat.features = Matrix::Constant(3, 2, 4.0);
  flat.classes = {0, 1, 0};
  flat.class_names = {"a", "b"};
  flat.feature_names = {"u", "v"};
  CHECK_THROWS_AS(zscore_normalize(flat), std::invalid_argument);
}

TEST_CASE("synthesize_blobs shape, noise flags and determinism") {
  const Dataset a = synthesize_blobs(50, 2, 2, 5.0, 1);
  CHECK(a.n() == 100);
  CHECK(a.p() == 4);
  CHECK(a.noise_features == std::vector<bool>{false, false, true, true});
  const Dataset b = synthesize_blobs(50, 2, 2, 5.0, 1);
  CHECK(a.features == b.features);
  CHECK(a.classes == b.classes);
  CHECK_NOTHROW(a.validate());
}

TEST_CASE("blobs with zero separation are indistinguishable") {
  double total = 0.0;
  const int seeds = 10;
  for (int s = 0; s < seeds; ++s) {
    const Dataset d = synthesize_blobs(50, 2, 0, 0.0, static_cast<std::uint64_t>(s + 1));
    total += knn_loocv_accuracy(d.features, d.classes, 5);
  }
  CHECK(std::abs(total / seeds - 0.5) <= 0.15);
}

TEST_CASE("synthesize_regression_gradient") {
  const Dataset d = synthesize_regression_gradient(200, 5, 7);
  CHECK(d.n() == 200);
  CHECK(d.p() == 5);
  CHECK(d.label_kind == LabelKind::regression);
  const auto r = pearson(d.targets, d.latent);
  REQUIRE(r.has_value());
  CHECK(*r > 0.9);
  const Dataset again = synthesize_regression_gradient(200, 5, 7);
  CHECK(again.features == d.features);
  CHECK(again.targets == d.targets);
  CHECK_THROWS(synthesize_regression_gradient(5, 5, 7));
}
