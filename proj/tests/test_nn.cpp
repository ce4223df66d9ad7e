#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "ivegan/gradcheck.hpp"
#include "ivegan/nn.hpp"

using namespace ivegan;

namespace {

double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-8);
}

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng) {
    std::vector<double> v(r * c);
    for (double& x : v) x = rng.uniform(-1.0, 1.0);
    return Tensor::matrix(r, c, std::move(v));
}

std::vector<Tensor> net_grads(const Network& net, const Tensor& x) {
    Tape t;
    const TapeBinding bind = bind_params(net, t, true);
    const Gradients g = t.backward(t.mean_all(forward(net, bind, t, t.leaf(x))));
    std::vector<Tensor> out;
    for (NodeId id : bind.params) out.push_back(g.at(id));
    return out;
}

}  // namespace

TEST_CASE("init_network shapes, biases, and layer specs") {
    Rng rng(1);
    const LayerSpec spec[] = {{196, 512, Act::LRelu, 0.2}, {512, 3, Act::Tanh}};
    const Network net = init_network(spec, rng);
    REQUIRE(net.layers.size() == 2);
    CHECK(net.in_dim() == 196);
    CHECK(net.out_dim() == 3);
    CHECK(net.layers[0].weight.shape() == std::vector<std::size_t>{196, 512});
    CHECK(net.layers[1].weight.shape() == std::vector<std::size_t>{512, 3});
    CHECK(net.layers[0].bias == Tensor::zeros({512}));
    CHECK(net.layers[1].bias == Tensor::zeros({3}));
    CHECK(net.n_params() == 196 * 512 + 512 + 512 * 3 + 3);

    const LayerSpec bad[] = {{4, 8, Act::Tanh}, {9, 2, Act::Linear}};
    CHECK_THROWS_AS(init_network(bad, rng), ShapeError);
}

TEST_CASE("He init statistics for a large LReLU layer") {
    Rng rng(2);
    const std::size_t fan_in = 512, fan_out = 512;
    const LayerSpec spec[] = {{fan_in, fan_out, Act::LRelu, 0.2}};
    const Network net = init_network(spec, rng);
    const auto d = net.layers[0].weight.data();
    const double n = static_cast<double>(d.size());
    const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
    double var = 0.0;
    for (double v : d) var += (v - mean) * (v - mean);
    var /= n;
    const double want = 2.0 / fan_in;
    CHECK(std::abs(mean) < 3.0 * std::sqrt(want / n));
    CHECK(rel_err(var, want) < 0.05);
}

TEST_CASE("Xavier init statistics and bounds for a Tanh layer") {
    Rng rng(3);
    const std::size_t fan_in = 512, fan_out = 256;
    const LayerSpec spec[] = {{fan_in, fan_out, Act::Tanh}};
    const Network net = init_network(spec, rng);
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    const auto d = net.layers[0].weight.data();
    double var = 0.0;
    for (double v : d) {
        CHECK(std::abs(v) <= bound);
        var += v * v;
    }
    var /= static_cast<double>(d.size());
    CHECK(rel_err(var, bound * bound / 3.0) < 0.05);  // uniform variance b^2/3
}

TEST_CASE("init determinism per seed") {
    const LayerSpec spec[] = {{8, 16, Act::LRelu, 0.2}, {16, 4, Act::Tanh}};
    Rng a(99), b(99), c(100);
    const Network na = init_network(spec, a);
    const Network nb = init_network(spec, b);
    const Network nc = init_network(spec, c);
    CHECK(na.layers[0].weight == nb.layers[0].weight);
    CHECK(na.layers[1].weight == nb.layers[1].weight);
    CHECK(na.layers[0].weight != nc.layers[0].weight);
}

TEST_CASE("tape forward equals inference forward") {
    Rng rng(5);
    const LayerSpec spec[] = {{3, 7, Act::LRelu, 0.2}, {7, 5, Act::Tanh}, {5, 1, Act::Linear}};
    const Network net = init_network(spec, rng);
    const Tensor x = random_matrix(4, 3, rng);

    Tape t;
    const TapeBinding bind = bind_params(net, t, false);
    const Tensor& via_tape = t.value(forward(net, bind, t, t.leaf(x)));
    CHECK(via_tape == forward(net, x));
    CHECK(via_tape.shape() == std::vector<std::size_t>{4, 1});

    CHECK_THROWS_AS(forward(net, random_matrix(4, 2, rng)), ShapeError);
}

TEST_CASE("sigmoid output layer stays in (0,1)") {
    Rng rng(6);
    const LayerSpec spec[] = {{2, 16, Act::LRelu, 0.2}, {16, 4, Act::Sigmoid}};
    const Network net = init_network(spec, rng);
    const Tensor y = forward(net, random_matrix(32, 2, rng));
    for (std::size_t i = 0; i < y.size(); ++i) {
        CHECK(y[i] > 0.0);
        CHECK(y[i] < 1.0);
    }
}

TEST_CASE("network gradients match finite differences parameter-wise") {
    Rng rng(7);
    const LayerSpec spec[] = {{3, 6, Act::Tanh}, {6, 2, Act::LRelu, 0.2}, {2, 1, Act::Linear}};
    Network net = init_network(spec, rng);
    const Tensor x = random_matrix(5, 3, rng);
    const std::vector<Tensor> grads = net_grads(net, x);
    REQUIRE(grads.size() == 6);

    // perturb each parameter tensor through a copy of the network
    double worst = 0.0;
    for (std::size_t p = 0; p < grads.size(); ++p) {
        const std::size_t layer = p / 2;
        const bool is_weight = p % 2 == 0;
        const Tensor at = is_weight ? net.layers[layer].weight : net.layers[layer].bias;
        const auto f = [&](const Tensor& v) {
            Network copy = net;
            (is_weight ? copy.layers[layer].weight : copy.layers[layer].bias) = v;
            return mean_all_val(forward(copy, x));
        };
        const Tensor fd = finite_difference_grad(f, at, 1e-6);
        for (std::size_t i = 0; i < fd.size(); ++i) {
            worst = std::max(worst, std::abs(grads[p][i] - fd[i]) /
                                        std::max(std::abs(fd[i]), 1e-8));
        }
    }
    CHECK(worst < 1e-5);
}

TEST_CASE("adam first step matches the closed form") {
    // With fresh state, m_hat = g and v_hat = g^2, so the update is
    // -alpha * g / (|g| + eps) regardless of magnitude.
    for (double g : {0.1, 1.0, 10.0}) {
        const LayerSpec spec[] = {{1, 1, Act::Linear}};
        Rng rng(1);
        Network net = init_network(spec, rng);
        const double w0 = net.layers[0].weight[0];
        AdamState st = AdamState::init(net, AdamConfig{2e-4, 0.7, 0.999, 1e-8});
        const std::vector<Tensor> grads = {Tensor::matrix(1, 1, {g}), Tensor::vector({0.0})};
        adam_step(net, grads, st);
        const double want = w0 - 2e-4 * g / (std::abs(g) + 1e-8);
        CHECK(std::abs(net.layers[0].weight[0] - want) < 1e-12);
        CHECK(st.t == 1);
    }
}

TEST_CASE("adam converges on a quadratic") {
    const LayerSpec spec[] = {{1, 1, Act::Linear}};
    Rng rng(8);
    Network net = init_network(spec, rng);
    AdamState st = AdamState::init(net, AdamConfig{0.05, 0.9, 0.999, 1e-8});
    // minimize (w - 3)^2
    for (int i = 0; i < 2000; ++i) {
        const double w = net.layers[0].weight[0];
        adam_step(net, {Tensor::matrix(1, 1, {2.0 * (w - 3.0)}), Tensor::vector({0.0})}, st);
    }
    CHECK(net.layers[0].weight[0] == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("adam rejects misaligned gradients") {
    const LayerSpec spec[] = {{2, 3, Act::Tanh}};
    Rng rng(9);
    Network net = init_network(spec, rng);
    AdamState st = AdamState::init(net, {});
    CHECK_THROWS_AS(adam_step(net, {Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6})}, st), ShapeError);
    std::vector<Tensor> wrong = {Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6}), Tensor::vector({0, 0, 0})};
    CHECK_THROWS_AS(adam_step(net, wrong, st), ShapeError);
}

TEST_CASE("training updates are deterministic") {
    auto run = [] {
        const LayerSpec spec[] = {{2, 8, Act::Tanh}, {8, 1, Act::Linear}};
        Rng rng(11);
        Network net = init_network(spec, rng);
        AdamState st = AdamState::init(net, {});
        const Tensor x = random_matrix(16, 2, rng);
        for (int i = 0; i < 10; ++i) {
            Tape t;
            const TapeBinding bind = bind_params(net, t, true);
            const Gradients g = t.backward(t.mean_all(t.softplus(forward(net, bind, t, t.leaf(x)))));
            std::vector<Tensor> grads;
            for (NodeId id : bind.params) grads.push_back(g.at(id));
            adam_step(net, grads, st);
        }
        return net.layers[0].weight;
    };
    CHECK(run() == run());
}
