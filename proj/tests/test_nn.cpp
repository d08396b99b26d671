#include <cmath>
#include <filesystem>
#include <numeric>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "support/oracles.hpp"
#include "tnn/nn.hpp"

using namespace tnn;
using nn::NetworkSpec;

TEST(Glorot, BoundAndVariance) {
  rng::UniformSequence rng(7, rng::Stream::Weights);
  const std::size_t rows = 200, cols = 500;
  const Matrix w = nn::init_glorot(rows, cols, rng);
  const double bound = std::sqrt(6.0 / (rows + cols));
  double ss = 0.0, mean = 0.0;
  for (double x : w.data()) {
    EXPECT_LE(std::abs(x), bound);
    mean += x;
    ss += x * x;
  }
  mean /= static_cast<double>(w.size());
  const double var = ss / static_cast<double>(w.size()) - mean * mean;
  EXPECT_NEAR(var / (2.0 / (rows + cols)), 1.0, 0.05);
  EXPECT_NEAR(mean / bound, 0.0, 0.01);
}

TEST(Glorot, DeterministicPerSeed) {
  rng::UniformSequence a(3, rng::Stream::Weights), b(3, rng::Stream::Weights), c(4, rng::Stream::Weights);
  const Matrix wa = nn::init_glorot(5, 7, a);
  EXPECT_EQ(wa, nn::init_glorot(5, 7, b));
  EXPECT_NE(wa, nn::init_glorot(5, 7, c));
  EXPECT_THROW(nn::init_glorot(0, 3, a), InvalidArgument);
}

TEST(InitMpo, ShapesAndBound) {
  rng::UniformSequence rng(11, rng::Stream::Weights);
  const MpoPair mpo = nn::init_mpo(4, 2, rng);
  EXPECT_EQ(mpo.param_count(), 64u);
  EXPECT_EQ(mpo.w1().dims(), (std::array<std::size_t, 3>{4, 2, 4}));
  EXPECT_EQ(mpo.w2().dims(), (std::array<std::size_t, 3>{2, 4, 4}));
  const double bound = std::sqrt(6.0 / (4 * 2 + 4));
  for (double x : mpo.w1().data()) EXPECT_LE(std::abs(x), bound);
  for (double x : mpo.w2().data()) EXPECT_LE(std::abs(x), bound);
}

TEST(TnnInit, LowKroneckerRankDenseMatrix) {
  for (std::size_t chi : {1u, 2u, 3u}) {
    rng::UniformSequence a(5, rng::Stream::Weights), b(5, rng::Stream::Weights);
    const Matrix w = nn::tnn_init_weights(4, chi, a);
    EXPECT_EQ(w.rows(), 16u);
    EXPECT_EQ(w.size(), 256u);  // d⁴ free entries once trained densely
    EXPECT_LE(oracle::numerical_rank(rearrangement(w)), chi);
    EXPECT_EQ(w, contract_mpo(nn::init_mpo(4, chi, b)));
  }
  NetworkSpec init = NetworkSpec::tensor_init(16);
  EXPECT_EQ(nn::param_count(init), nn::param_count(NetworkSpec::dense(16, 16)));
}

TEST(TnnInit, NetworkLayerStartsAsMpo) {
  const nn::Network net = nn::Network::initialize(NetworkSpec::tensor_init(16), 9);
  EXPECT_EQ(net.parameters()[2].rows(), 16u);
  EXPECT_LE(oracle::numerical_rank(rearrangement(net.layer2_weight())), 2u);
  const nn::Network odd = nn::Network::initialize(NetworkSpec::tensor_init(10), 9);
  EXPECT_LE(oracle::numerical_rank(rearrangement(odd.layer2_weight(), 2, 5)), 2u);
}

TEST(ParamCount, ReferenceArchitectures) {
  EXPECT_EQ(nn::param_count(NetworkSpec::tensor(16)), 161u);
  EXPECT_EQ(nn::param_count(NetworkSpec::dense(4, 24)), 161u);
  EXPECT_EQ(nn::param_count(NetworkSpec::dense(16, 16)), 353u);
  EXPECT_NEAR(161.0 / 353.0, 0.456, 1e-3);
  EXPECT_EQ(nn::Network::initialize(NetworkSpec::tensor(16), 1).param_count(), 161u);
  EXPECT_EQ(nn::Network::initialize(NetworkSpec::dense(4, 24), 1).param_count(), 161u);
}

TEST(ParamCount, ClosedFormsAcrossWidths) {
  for (std::size_t x : {9u, 16u, 25u, 36u}) {
    EXPECT_EQ(nn::param_count(NetworkSpec::tensor(x)), 10 * x + 1) << x;
    EXPECT_EQ(nn::param_count(NetworkSpec::dense(x, x)), x * x + 6 * x + 1) << x;
    EXPECT_LT(nn::param_count(NetworkSpec::tensor(x)), nn::param_count(NetworkSpec::dense(x, x)));
    EXPECT_EQ(nn::param_count(NetworkSpec::tensor_init(x)), nn::param_count(NetworkSpec::dense(x, x)));
    EXPECT_EQ(nn::Network::initialize(NetworkSpec::tensor(x), 2).param_count(), 10 * x + 1);
  }
}

TEST(Spec, ParseAndName) {
  EXPECT_EQ(NetworkSpec::parse("TNN(16)"), NetworkSpec::tensor(16));
  EXPECT_EQ(NetworkSpec::parse("dnn( 4, 24 )"), NetworkSpec::dense(4, 24));
  EXPECT_EQ(NetworkSpec::parse("TNN_INIT(10)"), NetworkSpec::tensor_init(10));
  EXPECT_EQ(NetworkSpec::parse("TNN(16)", 3).bond_dim, 3u);
  for (const char* s : {"TNN(16)", "DNN(4,24)", "TNN_INIT(10)"}) EXPECT_EQ(NetworkSpec::parse(s).name(), s);
  EXPECT_THROW(NetworkSpec::parse("TNN(10)"), InvalidArgument);
  EXPECT_THROW(NetworkSpec::parse("CNN(3)"), InvalidArgument);
  EXPECT_THROW(NetworkSpec::parse("DNN(0,4)"), InvalidArgument);
  EXPECT_EQ(NetworkSpec::tensor_init(10).mpo_dims(), (std::pair<std::size_t, std::size_t>{2, 5}));
  EXPECT_EQ(NetworkSpec::tensor(16).mpo_dims(), (std::pair<std::size_t, std::size_t>{4, 4}));
  EXPECT_THROW(NetworkSpec::dense(3, 3).mpo_dims(), InvalidArgument);
  EXPECT_EQ(nn::parse_activation("leaky_relu"), ad::Activation::LeakyRelu);
  EXPECT_THROW(nn::parse_activation("relu6"), InvalidArgument);
}

TEST(Forward, ZeroWeightsGiveConstantOutput) {
  nn::Network net = nn::Network::initialize(NetworkSpec::dense(4, 5), 1);
  for (Matrix& p : net.parameters()) p.fill(0.0);
  net.parameters().back()(0, 0) = 0.37;
  const Matrix out = net.forward(Matrix::from_rows({{0.1, 2.0, -3.0}, {5.0, 0.0, 1.0}}));
  EXPECT_EQ(out(0, 0), 0.37);
  EXPECT_EQ(out(1, 0), 0.37);
}

TEST(Forward, TensorLayerEqualsDenseWithContractedWeight) {
  const nn::Network tn = nn::Network::initialize(NetworkSpec::tensor(16), 4);
  std::vector<Matrix> dense_params;
  const auto p = tn.parameters();
  dense_params = {p[0], p[1], tn.layer2_weight(), p[4], p[5], p[6]};
  const nn::Network dn(NetworkSpec::dense(16, 16), dense_params);
  Matrix x(7, 3);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(1.7 * i);
  EXPECT_LE(max_abs_diff(tn.forward(x), dn.forward(x)), 1e-13);
  const MpoPair mpo(Rank3Tensor(4, 2, 4, {p[2].data().begin(), p[2].data().end()}),
                    Rank3Tensor(2, 4, 4, {p[3].data().begin(), p[3].data().end()}));
  EXPECT_LE(max_abs_diff(tn.layer2_weight(), oracle::kron_sum(mpo)), 1e-14);
}

TEST(Forward, RowsAreIndependent) {
  const nn::Network net = nn::Network::initialize(NetworkSpec::tensor(9), 5);
  Matrix x(4, 3);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::cos(0.3 * i);
  const Matrix all = net.forward(x);
  for (std::size_t r = 0; r < 4; ++r) {
    Matrix one(1, 3);
    for (std::size_t c = 0; c < 3; ++c) one(0, c) = x(r, c);
    EXPECT_EQ(net.forward(one)(0, 0), all(r, 0));
  }
  EXPECT_THROW(net.forward(Matrix(2, 4)), InvalidArgument);
}

TEST(Forward, GraphAgreesWithDirectEvaluation) {
  for (const NetworkSpec& s : {NetworkSpec::tensor(16), NetworkSpec::dense(4, 24), NetworkSpec::tensor_init(10)}) {
    const nn::Network net = nn::Network::initialize(s, 6);
    Matrix x(5, 3);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 0.1 * static_cast<double>(i) - 0.7;
    ad::Graph g;
    const auto in = g.input("x", 5, 3);
    const auto h = net.build(g, g.leaf(in));
    ad::Bindings b;
    b.bind(in, x);
    net.bind(h, b);
    g.evaluate(b);
    EXPECT_LE(max_abs_diff(g.value(h.output), net.forward(x)), 1e-13) << s.name();
  }
}

TEST(Loss, LogCosh) {
  EXPECT_EQ(nn::log_cosh(0.0), 0.0);
  EXPECT_NEAR(nn::log_cosh(1e-4), 0.5e-8, 1e-16);
  EXPECT_NEAR(nn::log_cosh(1000.0), 1000.0 - std::log(2.0), 1e-9);
  EXPECT_NEAR(nn::log_cosh(0.5), std::log(std::cosh(0.5)), 1e-15);
  const std::vector<double> p{1.0, -2.0}, t{1.0, 0.0};
  EXPECT_NEAR(nn::logcosh_loss(p, t), std::log(std::cosh(2.0)) / 2.0, 1e-15);
  EXPECT_THROW(nn::logcosh_loss(p, std::vector<double>{1.0}), InvalidArgument);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<Matrix> params{Matrix::from_rows({{1.0, -1.0, 0.5}})};
  const std::vector<Matrix> grads{Matrix::from_rows({{3.0, -0.01, 0.0}})};
  nn::Adam adam({.learning_rate = 1e-2}, params);
  adam.step(params, grads);
  EXPECT_NEAR(params[0](0, 0), 1.0 - 1e-2, 1e-9);
  EXPECT_NEAR(params[0](0, 1), -1.0 + 1e-2, 1e-6);
  EXPECT_EQ(params[0](0, 2), 0.5);
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, ZeroGradientKeepsParameters) {
  std::vector<Matrix> params{Matrix(2, 2, 0.3)};
  const std::vector<Matrix> grads{Matrix(2, 2, 0.0)};
  nn::Adam adam({}, params);
  for (int k = 0; k < 10; ++k) adam.step(params, grads);
  EXPECT_EQ(params[0], Matrix(2, 2, 0.3));
  EXPECT_EQ(adam.steps(), 10u);
}

TEST(Adam, MinimizesQuadratic) {
  std::vector<Matrix> params{Matrix::from_rows({{2.0, -3.0}})};
  nn::Adam adam({.learning_rate = 0.05}, params);
  for (int k = 0; k < 2000; ++k) {
    const std::vector<Matrix> grads{2.0 * params[0]};
    adam.step(params, grads);
  }
  EXPECT_NEAR(params[0](0, 0), 0.0, 1e-3);
  EXPECT_NEAR(params[0](0, 1), 0.0, 1e-3);
}

TEST(Persistence, SaveLoadRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "tnn_nn_roundtrip";
  std::filesystem::create_directories(dir);
  for (const NetworkSpec& s : {NetworkSpec::tensor(16), NetworkSpec::dense(4, 24), NetworkSpec::tensor_init(10)}) {
    const nn::Network net = nn::Network::initialize(s, 12);
    const auto path = dir / "net.json";
    net.save(path);
    const nn::Network back = nn::Network::load(path);
    EXPECT_EQ(back.spec(), net.spec());
    ASSERT_EQ(back.parameters().size(), net.parameters().size());
    for (std::size_t k = 0; k < net.parameters().size(); ++k) EXPECT_EQ(back.parameters()[k], net.parameters()[k]);
  }
  std::filesystem::remove_all(dir);
}

TEST(Persistence, RejectsForeignDocuments) {
  EXPECT_THROW(nn::Network::from_json(nlohmann::json{{"format", "other"}}), InvalidArgument);
  nlohmann::json j = nn::Network::initialize(NetworkSpec::tensor(9), 1).to_json();
  j["parameters"][2]["rows"] = 5;
  EXPECT_ANY_THROW(nn::Network::from_json(j));
}

TEST(Network, InitializationIsDeterministic) {
  const auto a = nn::Network::initialize(NetworkSpec::tensor(16), 21);
  const auto b = nn::Network::initialize(NetworkSpec::tensor(16), 21);
  const auto c = nn::Network::initialize(NetworkSpec::tensor(16), 22);
  for (std::size_t k = 0; k < a.parameters().size(); ++k) EXPECT_EQ(a.parameters()[k], b.parameters()[k]);
  EXPECT_NE(a.parameters()[0], c.parameters()[0]);
  EXPECT_EQ(a.parameters()[1], Matrix(1, 16));  // biases start at zero
  const std::vector<std::string> names{"l1.w", "l1.b", "l2.w1", "l2.w2", "l2.b", "out.w", "out.b"};
  EXPECT_EQ(a.parameter_names(), names);
}
