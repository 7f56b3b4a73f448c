#include <catch_amalgamated.hpp>

#include <array>
#include <filesystem>

#include "fullend/ad/adam.hpp"
#include "fullend/ad/checkpoint.hpp"
#include "fullend/ad/gradcheck.hpp"
#include "fullend/ad/layers.hpp"
#include "fullend/ad/ops.hpp"
#include "fullend/error.hpp"
#include "fullend/models/crn.hpp"
#include "fullend/models/profile.hpp"
#include "support.hpp"

using namespace fullend;
using namespace fullend::testing;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;
using ad::Tensor;

namespace {

// Random linear functional of the output, so every output element carries a
// distinct weight in the loss.
Tensor project(const Tensor& y, std::uint64_t seed = 99) {
  const auto w = random_tensor(y.shape(), seed).detach();
  return ad::sum(ad::mul(y, w));
}

ad::ParamList with(ad::ParamList params, const std::vector<std::pair<std::string, Tensor>>& inputs) {
  for (auto& [name, t] : inputs) {
    t.node()->requires_grad = true;
    params.push_back({name, t});
  }
  return params;
}

template <class L>
ad::ParamList params_of(const L& layer) {
  ad::ParamList p;
  layer.collect(p);
  return p;
}

void require_gradcheck(const std::function<Tensor()>& loss, const ad::ParamList& inputs, double tol = 1e-4) {
  ad::GradcheckOptions o;
  o.tolerance = tol;
  const auto report = ad::gradcheck(loss, inputs, o);
  INFO(report.str());
  REQUIRE(report.passed());
}

}  // namespace

TEST_CASE("gradient of a sum of squares", "[autodiff]") {
  auto x = Tensor::from({3}, {1, 2, 3}, true);
  ad::sum(ad::square(x)).backward();
  REQUIRE(x.has_grad());
  CHECK(std::vector<double>(x.grad().begin(), x.grad().end()) == std::vector<double>{2, 4, 6});
}

TEST_CASE("gradient of a linear layer is the outer product", "[autodiff]") {
  auto w = random_tensor({4, 3}, 1, 1.0, true);
  auto x = Tensor::from({1, 3}, {0.5, -1.0, 2.0});
  ad::sum(ad::linear(x, w, nullptr)).backward();
  for (std::size_t o = 0; o < 4; ++o)
    for (std::size_t i = 0; i < 3; ++i) CHECK(w.grad()[o * 3 + i] == x[i]);
  CHECK(!x.has_grad());
}

TEST_CASE("non-participating tensors get no gradient", "[autodiff]") {
  auto a = random_tensor({5}, 1, 1.0, true);
  auto b = random_tensor({5}, 2, 1.0, true);
  auto unused = random_tensor({5}, 3, 1.0, true);
  ad::sum(ad::mul(a, b)).backward();
  CHECK(a.has_grad());
  CHECK(b.has_grad());
  CHECK(!unused.has_grad());
  {
    ad::NoGradGuard guard;
    auto y = ad::mul(a, b);
    CHECK(!y.requires_grad());
  }
}

TEST_CASE("shape mismatches are contract errors", "[autodiff]") {
  CHECK_THROWS_AS(ad::add(Tensor::zeros({3}), Tensor::zeros({4})), ContractError);
  CHECK_THROWS_AS(ad::matmul(Tensor::zeros({2, 3}), Tensor::zeros({2, 3})), ContractError);
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), ContractError);
  ad::ParamRng rng(1);
  ad::Linear l("probe", 4, 2, rng);
  try {
    l.forward(Tensor::zeros({3, 5}));
    FAIL("expected an error");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("probe") != std::string::npos);
  }
}

TEST_CASE("NaN activations abort with the layer name", "[autodiff]") {
  ad::ParamRng rng(1);
  ad::Linear l("nan_probe", 2, 2, rng);
  auto x = Tensor::from({1, 2}, {std::nan(""), 0.0});
  try {
    l.forward(x);
    FAIL("expected an error");
  } catch (const NumericError& e) {
    CHECK(e.where().find("nan_probe") != std::string::npos);
  }
}

TEST_CASE("wide strided conv2d matches central differences", "[layers]") {
  // channel counts of the deeper discriminator layers
  ad::ParamRng init(8);
  ad::Conv2dGeometry g;
  g.stride_t = g.stride_f = 2;
  g.pad_t_before = g.pad_t_after = g.pad_f = 1;
  std::uint64_t seed = 40;
  for (auto [ci, co, t, f] : std::vector<std::array<std::size_t, 4>>{{32, 6, 2, 9}, {48, 4, 1, 9}, {64, 3, 3, 7}}) {
    DYNAMIC_SECTION("Ci=" << ci << " Co=" << co) {
      ad::Conv2d l("conv2d", ci, co, 3, 3, g, init);
      auto x = random_tensor({ci, t, f}, ++seed);
      require_gradcheck([&] { return project(l.forward(x)); }, with(params_of(l), {{"x", x}}));
    }
  }
}

TEST_CASE("conv2d 1x3 stride 1x2 halves the frequency axis", "[layers]") {
  ad::ParamRng rng(1);
  ad::Conv2dGeometry g;
  g.stride_f = 2;
  ad::Conv2d conv("enc", 1, 4, 1, 3, g, rng);
  for (std::size_t f : {257u, 128u, 63u, 31u, 15u, 7u}) {
    const auto y = conv.forward(Tensor::zeros({1, 9, f}));
    CHECK(y.dim(1) == 9);
    CHECK(y.dim(2) == (f - 3) / 2 + 1);
  }
}

TEST_CASE("every layer passes gradcheck on several shapes", "[layers][gradcheck]") {
  ad::ParamRng init(5);
  std::uint64_t seed = 10;
  for (auto [t, f, c] : std::vector<std::tuple<std::size_t, std::size_t, std::size_t>>{{3, 7, 2}, {5, 9, 3}, {2, 11, 1}}) {
    DYNAMIC_SECTION("T=" << t << " F=" << f << " C=" << c) {
      {
        ad::Linear l("linear", f, c + 1, init);
        auto x = random_tensor({t, f}, ++seed);
        require_gradcheck([&] { return project(l.forward(x)); }, with(params_of(l), {{"x", x}}));
      }
      {
        ad::Conv2dGeometry g;
        g.stride_f = 2;
        g.pad_t_before = 1;
        ad::Conv2d l("conv2d", c, c + 1, 2, 3, g, init);
        auto x = random_tensor({c, t, f}, ++seed);
        require_gradcheck([&] { return project(l.forward(x)); }, with(params_of(l), {{"x", x}}));
      }
      {
        ad::ConvTranspose2d l("convt", c, 2, 3, 2, f % 2, init);
        auto x = random_tensor({c, t, f}, ++seed);
        require_gradcheck([&] { return project(l.forward(x)); }, with(params_of(l), {{"x", x}}));
      }
      {
        ad::Conv1dCausal l("conv1d", c, 3, 3, init);
        auto x = random_tensor({t + 2, c}, ++seed);
        require_gradcheck([&] { return project(l.forward(x)); }, with(params_of(l), {{"x", x}}));
      }
      {
        ad::FrameLayerNorm l("frame_ln", c);
        auto x = random_tensor({c, t, f}, ++seed);
        require_gradcheck([&] { return project(l.forward(x)); }, with(params_of(l), {{"x", x}}));
      }
      {
        ad::CumulativeLayerNorm l("cum_ln", c + 1);
        auto x = random_tensor({t + 1, c + 1}, ++seed);
        require_gradcheck([&] { return project(l.forward(x)); }, with(params_of(l), {{"x", x}}));
      }
      {
        ad::PRelu l("prelu", c, 0);
        auto x = random_tensor({c, t, f}, ++seed);
        require_gradcheck([&] { return project(l.forward(x)); }, with(params_of(l), {{"x", x}}));
      }
      {
        ad::Lstm l("lstm", c + 1, 8, init);
        auto x = random_tensor({t, c + 1}, ++seed);
        require_gradcheck([&] { return project(l.forward(x)); }, with(params_of(l), {{"x", x}}));
      }
      {
        ad::MultiHeadAttention l("mha", 16, 2, init);
        auto q = random_tensor({t, 16}, ++seed);
        auto m = random_tensor({f, 16}, ++seed);
        require_gradcheck([&] { return project(l.forward(q, m)); }, with(params_of(l), {{"query", q}, {"memory", m}}));
      }
      {
        auto x = random_tensor({t, f}, ++seed, 0.5);
        require_gradcheck([&] { return project(ad::tanh(x)); }, with({}, {{"x", x}}));
        require_gradcheck([&] { return project(ad::sigmoid(x)); }, with({}, {{"x", x}}));
        require_gradcheck([&] { return project(ad::exp(x)); }, with({}, {{"x", x}}));
      }
    }
  }
}

TEST_CASE("PReLU uses the negative slope at exactly zero", "[layers]") {
  auto x = Tensor::from({1, 3}, {0.0, 1.0, -2.0}, true);
  auto alpha = Tensor::from({1}, {0.25}, true);
  auto y = ad::prelu(x, alpha, 0);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 1.0);
  CHECK(y[2] == -0.5);
  ad::sum(y).backward();
  CHECK(x.grad()[0] == 0.25);
  CHECK(x.grad()[1] == 1.0);
  CHECK(x.grad()[2] == 0.25);
  CHECK(alpha.grad()[0] == -2.0);
  // away from the kink the finite-difference check holds
  auto x2 = Tensor::from({1, 4}, {0.3, -0.7, 1e-2, -1e-2}, true);
  auto a2 = Tensor::from({1}, {0.25}, true);
  require_gradcheck([&] { return project(ad::prelu(x2, a2, 0)); }, {{"x", x2}, {"alpha", a2}});
}

TEST_CASE("cumulative layer norm, LSTM and causal conv are causal", "[layers][property]") {
  ad::ParamRng init(7);
  ad::CumulativeLayerNorm cln("cln", 4);
  ad::Lstm lstm("lstm", 4, 6, init);
  ad::Conv1dCausal conv("conv", 4, 3, 5, init);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_tensor({12, 4}, rng());
    const std::size_t t = rng() % 11;
    auto changed = x.detach();
    for (std::size_t i = (t + 1) * 4; i < changed.size(); ++i) changed.data()[i] += 1.0 + static_cast<double>(i);
    for (const auto& [a, b] : {std::pair{cln.forward(x), cln.forward(changed)}, std::pair{lstm.forward(x), lstm.forward(changed)},
                               std::pair{conv.forward(x), conv.forward(changed)}}) {
      const std::size_t width = a.dim(1);
      for (std::size_t i = 0; i < (t + 1) * width; ++i) REQUIRE(a[i] == b[i]);
    }
  }
}

TEST_CASE("attention weights are a softmax over memory", "[layers]") {
  ad::ParamRng init(2);
  ad::MultiHeadAttention mha("mha", 16, 2, init);
  std::vector<double> w;
  mha.forward(random_tensor({3, 16}, 1), random_tensor({16, 16}, 2), &w);
  REQUIRE(w.size() == 2 * 3 * 16);
  for (std::size_t row = 0; row < 6; ++row) {
    double s = 0.0;
    for (std::size_t n = 0; n < 16; ++n) {
      CHECK(w[row * 16 + n] >= 0.0);
      s += w[row * 16 + n];
    }
    CHECK_THAT(s, WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("Adam first step moves each parameter by about lr", "[adam]") {
  auto p = Tensor::from({4}, {1.0, -1.0, 0.5, 2.0}, true);
  const std::vector<double> g{0.3, -2.0, 1e-3, 50.0};
  p.node()->grad_buffer() = g;
  ad::Adam opt({{"p", p}}, {});
  CHECK(opt.config().lr == 2e-4);
  const std::vector<double> before(p.values().begin(), p.values().end());
  opt.step();
  for (std::size_t i = 0; i < 4; ++i) {
    const double expected = -2e-4 * g[i] / (std::abs(g[i]) + 1e-8);
    CHECK_THAT(p[i] - before[i], WithinAbs(expected, 1e-12));
  }
  CHECK(opt.steps() == 1);
}

TEST_CASE("Adam with zero gradient leaves parameters and moments alone", "[adam]") {
  auto p = Tensor::from({3}, {1.0, 2.0, 3.0}, true);
  auto q = Tensor::from({2}, {4.0, 5.0}, true);  // never receives a gradient buffer
  p.node()->grad_buffer();
  ad::Adam opt({{"p", p}, {"q", q}}, {});
  opt.step();
  CHECK(std::vector<double>(p.values().begin(), p.values().end()) == std::vector<double>{1, 2, 3});
  CHECK(std::vector<double>(q.values().begin(), q.values().end()) == std::vector<double>{4, 5});
  for (double m : opt.first_moment(0)) CHECK(m == 0.0);
  for (double v : opt.second_moment(1)) CHECK(v == 0.0);
  CHECK(opt.steps() == 1);
}

TEST_CASE("Adam aborts on a non-finite gradient", "[adam]") {
  auto p = Tensor::from({2}, {1.0, 2.0}, true);
  auto q = Tensor::from({1}, {3.0}, true);
  p.node()->grad_buffer() = {0.5, 0.5};
  q.node()->grad_buffer() = {std::numeric_limits<double>::infinity()};
  ad::Adam opt({{"p", p}, {"q", q}}, {});
  try {
    opt.step();
    FAIL("expected an error");
  } catch (const NumericError& e) {
    CHECK(e.where().find("q") != std::string::npos);
  }
  CHECK(p[0] == 1.0);
  CHECK(opt.steps() == 0);
  ad::AdamConfig bad;
  bad.lr = 0.0;
  CHECK_THROWS_AS(bad.validate(), ContractError);
}

TEST_CASE("checkpoints round trip names, shapes, values and metadata", "[checkpoint]") {
  ad::ParamList params{{"a.weight", random_tensor({3, 4}, 1)}, {"b", random_tensor({5}, 2)}};
  const std::map<std::string, std::string> meta{{"profile", "tiny"}, {"seed", "7"}};
  const auto path = (std::filesystem::temp_directory_path() / "fullend_test.ckpt").string();
  ad::save_checkpoint(path, params, meta);
  const auto ck = ad::load_checkpoint(path);
  CHECK(ck.meta == meta);
  REQUIRE(ck.tensors.size() == 2);
  CHECK(ck.find("a.weight")->shape() == ad::Shape{3, 4});
  ad::ParamList target{{"a.weight", Tensor::zeros({3, 4})}, {"b", Tensor::zeros({5})}};
  ad::restore(ck, target);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(std::vector<double>(target[i].tensor.values().begin(), target[i].tensor.values().end()) ==
          std::vector<double>(params[i].tensor.values().begin(), params[i].tensor.values().end()));
  CHECK(ad::encode_checkpoint(params, meta).substr(0, 8) == "FESECKPT");

  ad::ParamList wrong{{"a.weight", Tensor::zeros({4, 3})}};
  CHECK_THROWS_AS(ad::restore(ck, wrong), IoError);
  CHECK_THROWS(ad::decode_checkpoint("garbage"));
  std::filesystem::remove(path);
}

TEST_CASE("initialisation is deterministic in the seed", "[layers]") {
  ad::ParamRng a(3), b(3), c(4);
  ad::Lstm la("l", 3, 5, a), lb("l", 3, 5, b), lc("l", 3, 5, c);
  CHECK(std::vector<double>(la.w_hh.values().begin(), la.w_hh.values().end()) ==
        std::vector<double>(lb.w_hh.values().begin(), lb.w_hh.values().end()));
  CHECK(std::vector<double>(la.w_hh.values().begin(), la.w_hh.values().end()) !=
        std::vector<double>(lc.w_hh.values().begin(), lc.w_hh.values().end()));
  // orthogonal recurrent init
  const auto q = ad::orthogonal(6, 6, a);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < 6; ++k) dot += q[i * 6 + k] * q[j * 6 + k];
      CHECK_THAT(dot, WithinAbs(i == j ? 1.0 : 0.0, 1e-12));
    }
}

TEST_CASE("full CRN gradients match central differences on 10 frames", "[crn][gradcheck]") {
  const auto profile = models::ModelProfile::tiny();
  ad::ParamRng init(3);
  models::Crn crn(profile, init);
  auto x = random_tensor({2, 10, profile.bins}, 4, 0.1);
  auto emb = random_tensor({10, profile.embedding_dim()}, 5, 0.1);
  ad::ParamList inputs = crn.params();
  inputs.push_back({"embedding", emb});
  emb.node()->requires_grad = true;
  ad::GradcheckOptions o;
  o.step = 1e-5;
  o.tolerance = 1e-4;
  o.max_entries = 4;
  const auto report = ad::gradcheck([&] { return project(crn.mask(x, &emb), 6); }, inputs, o);
  INFO(report.str());
  CHECK(report.passed());
}
