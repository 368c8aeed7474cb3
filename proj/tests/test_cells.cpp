#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mtc/cells.hpp"

TEST_CASE("rnn cell hand evaluations") {
    // zero parameters -> tanh(0) = 0
    {
        std::vector<double> wx(4, 0.0), wh(16, 0.0), b(4, 0.0);
        mtc::RnnCellParams p{wx.data(), wh.data(), b.data(), 1, 4};
        std::vector<double> x{0.7}, h(4, 0.3), out(4);
        mtc::rnn_cell_forward(x, h, p, out);
        for (double v : out) REQUIRE(v == 0.0);
    }
    // scalar case: W_x=1, W_h=0, b=0, x=0.5
    {
        std::vector<double> wx{1.0}, wh{0.0}, b{0.0};
        mtc::RnnCellParams p{wx.data(), wh.data(), b.data(), 1, 1};
        std::vector<double> x{0.5}, h{0.0}, out(1);
        mtc::rnn_cell_forward(x, h, p, out);
        REQUIRE(out[0] == Catch::Approx(0.46211715726).epsilon(1e-10));
    }
}

TEST_CASE("rnn cell output stays inside (-1, 1)") {
    mtc::Rng rng(4);
    std::vector<double> wx(8), wh(64), b(8);
    for (auto& v : wx) v = rng.uniform(-3, 3);
    for (auto& v : wh) v = rng.uniform(-3, 3);
    for (auto& v : b) v = rng.uniform(-3, 3);
    mtc::RnnCellParams p{wx.data(), wh.data(), b.data(), 1, 8};
    for (int i = 0; i < 100; ++i) {
        std::vector<double> x{rng.uniform(-10, 10)}, h(8), out(8);
        for (auto& v : h) v = rng.uniform(-1, 1);
        mtc::rnn_cell_forward(x, h, p, out);
        for (double v : out) {
            REQUIRE(v > -1.0);
            REQUIRE(v < 1.0);
        }
    }
}

TEST_CASE("rnn cell rejects mismatched shapes") {
    std::vector<double> wx(4, 0.0), wh(16, 0.0), b(4, 0.0);
    mtc::RnnCellParams p{wx.data(), wh.data(), b.data(), 1, 4};
    std::vector<double> x{0.0, 0.0}, h(4), out(4);
    REQUIRE_THROWS_AS(mtc::rnn_cell_forward(x, h, p, out), std::invalid_argument);
}

TEST_CASE("lstm cell hand evaluations") {
    const int n = 3;
    std::vector<double> wx(4 * n, 0.0), wh(4 * n * n, 0.0), b(4 * n, 0.0);
    mtc::LstmCellParams p{wx.data(), wh.data(), b.data(), 1, n};
    // zero everything -> zero state and output
    {
        std::vector<double> x{0.0}, h(n, 0.0), c(n, 0.0), ho(n), co(n);
        mtc::lstm_cell_forward(x, h, c, p, ho, co);
        for (double v : ho) REQUIRE(v == 0.0);
        for (double v : co) REQUIRE(v == 0.0);
    }
    // zero params, c_prev = 1: gates 0.5, candidate 0 => c = 0.5, h = 0.5*tanh(0.5)
    {
        std::vector<double> x{2.5}, h(n, 0.0), c(n, 1.0), ho(n), co(n);
        mtc::lstm_cell_forward(x, h, c, p, ho, co);
        for (double v : co) REQUIRE(v == Catch::Approx(0.5).epsilon(1e-12));
        for (double v : ho) REQUIRE(v == Catch::Approx(0.23105857863).epsilon(1e-10));
    }
    // saturated forget gate, closed input gate: c_t = c_prev exactly
    {
        std::vector<double> b2(4 * n, 0.0);
        for (int i = 0; i < n; ++i) {
            b2[i] = -500.0;      // input gate -> 0
            b2[n + i] = 500.0;   // forget gate -> 1
        }
        mtc::LstmCellParams p2{wx.data(), wh.data(), b2.data(), 1, n};
        std::vector<double> x{1.0}, h(n, 0.2), c{0.3, -0.7, 1.4}, ho(n), co(n);
        mtc::lstm_cell_forward(x, h, c, p2, ho, co);
        for (int i = 0; i < n; ++i) REQUIRE(co[i] == c[i]);
    }
}

TEST_CASE("gru cell hand evaluations") {
    const int n = 2;
    std::vector<double> wx(3 * n, 0.0), wh(3 * n * n, 0.0), b(3 * n, 0.0);
    mtc::GruCellParams p{wx.data(), wh.data(), b.data(), 1, n};
    // zero params, zero state -> zero
    {
        std::vector<double> x{1.0}, h(n, 0.0), out(n);
        mtc::gru_cell_forward(x, h, p, out);
        for (double v : out) REQUIRE(v == 0.0);
    }
    // zero params, h_prev = 0.8 -> z = 0.5, candidate = 0 -> h = 0.4
    {
        std::vector<double> x{0.0}, h(n, 0.8), out(n);
        mtc::gru_cell_forward(x, h, p, out);
        for (double v : out) REQUIRE(v == Catch::Approx(0.4).epsilon(1e-12));
    }
    // update gate saturated to 0 -> h = h_prev exactly
    {
        std::vector<double> b2(3 * n, 0.0);
        for (int i = 0; i < n; ++i) b2[i] = -500.0; // z -> 0
        mtc::GruCellParams p2{wx.data(), wh.data(), b2.data(), 1, n};
        std::vector<double> x{3.0}, h{0.37, -0.62}, out(n);
        mtc::gru_cell_forward(x, h, p2, out);
        for (int i = 0; i < n; ++i) REQUIRE(out[i] == h[i]);
    }
}
