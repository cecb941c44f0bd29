#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fairwos/encoder.hpp"
#include "fairwos/error.hpp"
#include "fairwos/synthetic.hpp"

using namespace fairwos;

namespace {

Graph pair_graph() {
  Graph g;
  g.num_nodes = 2;
  g.edges = {{0, 1}};
  g.features = Mat(2, 1);
  g.features(0, 0) = 0.0;
  g.features(1, 0) = 2.0;
  g.labels = {0, 1};
  g.splits = {Split::train, Split::train};
  g.sensitive = {-1, -1};
  return g;
}

}  // namespace

TEST_CASE("encoder initialization is deterministic and shaped") {
  const EncoderParams a = init_encoder(5, 3, 42);
  const EncoderParams b = init_encoder(5, 3, 42);
  const EncoderParams c = init_encoder(5, 3, 43);
  CHECK(a.params.at("enc.self_w").value.rows == 5);
  CHECK(a.params.at("enc.self_w").value.cols == 3);
  CHECK(a.params.at("enc.neigh_w").value.rows == 5);
  CHECK(a.params.at("enc.neigh_w").value.cols == 3);
  CHECK(a.params.at("enc.b").value.cols == 3);
  CHECK(a.params.at("head.w").value.rows == 3);
  CHECK(a.params.at("head.w").value.cols == 2);
  CHECK(a.params.at("enc.self_w").value.data == b.params.at("enc.self_w").value.data);
  CHECK(a.params.at("enc.neigh_w").value.data == b.params.at("enc.neigh_w").value.data);
  CHECK(a.params.at("enc.self_w").value.data != c.params.at("enc.self_w").value.data);
  CHECK(a.params.at("enc.self_w").value.data != a.params.at("enc.neigh_w").value.data);
  CHECK_FALSE(a.trained);
}

TEST_CASE("encoder embedding on a hand computed pair") {
  // Standardized features are [-1, 1]. With self-loops both degrees are 2,
  // so the diagonal-free neighbor operator sends half the other node's value:
  // node 0 receives +0.5, node 1 receives -0.5.
  const Graph g = pair_graph();
  EncoderParams enc = init_encoder(1, 2, 0);
  enc.params.at("enc.self_w").value = Mat(1, 2, 1.0);
  Mat b(1, 2);
  b(0, 0) = 0.3;
  b(0, 1) = -0.4;
  enc.params.at("enc.b").value = b;

  SUBCASE("zero neighbor weight leaves the self path plus bias") {
    enc.params.at("enc.neigh_w").value = Mat(1, 2);
    const Mat h = encoder_embed(TrainView(g), enc);
    REQUIRE(h.rows == 2);
    REQUIRE(h.cols == 2);
    CHECK(h(0, 0) == 0.0);  // relu(-1 + 0.3)
    CHECK(h(0, 1) == 0.0);  // relu(-1 - 0.4)
    CHECK(h(1, 0) == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(h(1, 1) == doctest::Approx(0.6).epsilon(1e-12));
  }

  SUBCASE("unit neighbor weight adds the aggregated term") {
    enc.params.at("enc.neigh_w").value = Mat(1, 2, 1.0);
    const Mat h = encoder_embed(TrainView(g), enc);
    CHECK(h(0, 0) == 0.0);  // relu(-1 + 0.5 + 0.3)
    CHECK(h(0, 1) == 0.0);  // relu(-1 + 0.5 - 0.4)
    CHECK(h(1, 0) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(h(1, 1) == doctest::Approx(0.1).epsilon(1e-12));
  }
}

TEST_CASE("median thresholds split columns in half") {
  Mat values(4, 2);
  // column 0: 1,2,3,4 -> median 2.5; column 1: constant
  for (std::size_t i = 0; i < 4; ++i) {
    values(i, 0) = double(i + 1);
    values(i, 1) = 7.0;
  }
  const std::vector<int> train{0, 1, 2, 3};
  const PseudoAttrs pa = binarize_columns(values, train);
  CHECK(pa.thresholds[0] == doctest::Approx(2.5));
  CHECK(pa.bits(0, 0) == 0.0);
  CHECK(pa.bits(1, 0) == 0.0);
  CHECK(pa.bits(2, 0) == 1.0);
  CHECK(pa.bits(3, 0) == 1.0);
  CHECK(pa.active[0]);
  CHECK_FALSE(pa.active[1]);  // constant column is degenerate
  CHECK(pa.num_active() == 1);
}

TEST_CASE("odd count takes the middle value as threshold") {
  Mat values(3, 1);
  values(0, 0) = 10.0;
  values(1, 0) = 30.0;
  values(2, 0) = 20.0;
  const PseudoAttrs pa = binarize_columns(values, {0, 1, 2});
  CHECK(pa.thresholds[0] == 20.0);
  // strict comparison: the median itself lands on the zero side
  CHECK(pa.bits(2, 0) == 0.0);
  CHECK(pa.bits(1, 0) == 1.0);
}

TEST_CASE("thresholds come from the training split only") {
  Mat values(4, 1);
  values(0, 0) = 1.0;
  values(1, 0) = 2.0;
  values(2, 0) = 1000.0;  // not in train
  values(3, 0) = -1000.0;
  const PseudoAttrs pa = binarize_columns(values, {0, 1});
  CHECK(pa.thresholds[0] == doctest::Approx(1.5));
  CHECK(pa.bits(2, 0) == 1.0);
  CHECK(pa.bits(3, 0) == 0.0);
}

TEST_CASE("one sided training bits deactivate a column") {
  Mat values(4, 1);
  values(0, 0) = 1.0;
  values(1, 0) = 1.0;  // train median = 1, both bits 0
  values(2, 0) = 5.0;
  values(3, 0) = 6.0;
  const PseudoAttrs pa = binarize_columns(values, {0, 1});
  CHECK_FALSE(pa.active[0]);
  CHECK(pa.num_active() == 0);
}

TEST_CASE("pretraining beats the majority class on the default graph") {
  const SyntheticSpec spec;
  const Graph g = generate_synthetic(spec);
  const TrainView view(g);
  OptimizerConfig oc;
  const EncoderParams enc = pretrain_encoder(view, 16, 200, 0, oc);
  CHECK(enc.trained);

  const std::vector<int> val_ids = view.labeled_ids(Split::val);
  std::size_t pos = 0;
  for (int v : val_ids) pos += std::size_t(g.labels[v] == 1);
  const double majority =
      std::max(double(pos), double(val_ids.size() - pos)) / double(val_ids.size());
  CHECK(enc.best_val_acc > majority);
}

TEST_CASE("zero epochs yields the untrained initialization") {
  const Graph g = pair_graph();
  OptimizerConfig oc;
  const EncoderParams enc = pretrain_encoder(TrainView(g), 4, 0, 7, oc);
  const EncoderParams fresh = init_encoder(1, 4, 7);
  CHECK_FALSE(enc.trained);
  CHECK(enc.params.at("enc.self_w").value.data == fresh.params.at("enc.self_w").value.data);
  CHECK(enc.params.at("enc.neigh_w").value.data == fresh.params.at("enc.neigh_w").value.data);
}

TEST_CASE("extracted pseudo attributes cover every node") {
  SyntheticSpec spec;
  spec.num_nodes = 60;
  spec.seed = 5;
  const Graph g = generate_synthetic(spec);
  const TrainView view(g);
  OptimizerConfig oc;
  const EncoderParams enc = pretrain_encoder(view, 8, 50, 1, oc);
  const PseudoAttrs pa = extract_pseudo_attrs(view, enc);
  CHECK(pa.values.rows == g.num_nodes);
  CHECK(pa.values.cols == 8);
  CHECK(pa.bits.same_shape(pa.values));
  CHECK(pa.thresholds.size() == 8);
  for (std::size_t i = 0; i < pa.bits.size(); ++i) {
    CHECK((pa.bits.data[i] == 0.0 || pa.bits.data[i] == 1.0));
  }
}

TEST_CASE("csv export carries one row per node") {
  Mat values(3, 2);
  for (std::size_t i = 0; i < values.size(); ++i) values.data[i] = double(i) / 10.0;
  const PseudoAttrs pa = binarize_columns(values, {0, 1, 2});
  const std::string path =
      (std::filesystem::temp_directory_path() / "fw_pseudo.csv").string();
  export_pseudo_attrs_csv(pa, path);
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "id,x0_0,x0_1,bit_0,bit_1");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
  std::remove(path.c_str());
}
