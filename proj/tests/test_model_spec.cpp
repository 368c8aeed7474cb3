#include <catch2/catch_amalgamated.hpp>

#include "mtc/model_spec.hpp"

TEST_CASE("tcn receptive field follows the dilation sum") {
    mtc::ModelSpec spec;
    spec.kind = mtc::ModelKind::tcn;
    REQUIRE(spec.receptive_field() == 8); // 1 + (2-1)*(1+2+4)
    spec.tcn_layers = 4;
    REQUIRE(spec.receptive_field() == 16);
}

TEST_CASE("rnn parameter count matches the shape arithmetic") {
    mtc::ModelSpec spec;
    spec.kind = mtc::ModelKind::rnn;
    spec.hidden = {256};
    const auto m = mtc::build_manifest(spec);
    std::size_t cell = 0;
    for (const auto& b : m.blocks)
        if (b.name.rfind("layer", 0) == 0) cell += b.size();
    REQUIRE(cell == 256 * 1 + 256 * 256 + 256); // 66048
    REQUIRE(cell == 66048);
    // heads add two scalar outputs on the 256-wide feature
    REQUIRE(m.total == 66048 + 2 * (256 + 1));
    REQUIRE(mtc::count_params(spec) == m.total);
}

TEST_CASE("lstm carries exactly four times the rnn per-layer affine parameters") {
    mtc::ModelSpec rnn, lstm;
    rnn.kind = mtc::ModelKind::rnn;
    lstm.kind = mtc::ModelKind::lstm;
    rnn.hidden = lstm.hidden = {32};
    auto cell_params = [](const mtc::Manifest& m) {
        std::size_t c = 0;
        for (const auto& b : m.blocks)
            if (b.name.rfind("layer", 0) == 0) c += b.size();
        return c;
    };
    REQUIRE(cell_params(mtc::build_manifest(lstm)) == 4 * cell_params(mtc::build_manifest(rnn)));
}

TEST_CASE("complexity values follow the symbolic budget rules") {
    mtc::ModelSpec rnn;
    rnn.kind = mtc::ModelKind::rnn;
    rnn.hidden = {256};
    REQUIRE(mtc::complexity_value(rnn) == 512);

    mtc::ModelSpec tcn;
    tcn.kind = mtc::ModelKind::tcn;
    REQUIRE(mtc::complexity_value(tcn) == 2 * 32 * 8); // 512

    mtc::ModelSpec arima;
    arima.kind = mtc::ModelKind::arima;
    REQUIRE_THROWS(mtc::complexity_value(arima));
}

TEST_CASE("complexity budget inverts the rules") {
    const auto tcn = mtc::complexity_budget(1024, mtc::ModelKind::tcn);
    REQUIRE(tcn.tcn_filters == 64);
    REQUIRE(mtc::complexity_value(tcn) == 1024);

    const auto rnn = mtc::complexity_budget(512, mtc::ModelKind::rnn);
    REQUIRE(rnn.hidden == std::vector<int>{256});
    REQUIRE(mtc::complexity_value(rnn) == 512);

    // largest value not exceeding the target
    const auto odd = mtc::complexity_budget(515, mtc::ModelKind::rnn);
    REQUIRE(mtc::complexity_value(odd) <= 515);
    REQUIRE(odd.hidden[0] == 257);

    REQUIRE_THROWS_AS(mtc::complexity_budget(1, mtc::ModelKind::rnn), mtc::ConfigError);
    REQUIRE_THROWS_AS(mtc::complexity_budget(8, mtc::ModelKind::tcn), mtc::ConfigError);
}

TEST_CASE("manifest total equals the flat vector length for the campaign specs") {
    for (auto kind : {mtc::ModelKind::rnn, mtc::ModelKind::lstm, mtc::ModelKind::gru,
                      mtc::ModelKind::tcn}) {
        mtc::ModelSpec spec;
        spec.kind = kind;
        spec.hidden = {48};
        spec.tcn_filters = 8;
        const auto m = mtc::build_manifest(spec);
        std::size_t sum = 0;
        for (const auto& b : m.blocks) sum += b.size();
        REQUIRE(sum == m.total);
        REQUIRE(mtc::count_params(spec) == m.total);
    }
}

TEST_CASE("spec validation rejects bad shapes") {
    mtc::ModelSpec spec;
    spec.kind = mtc::ModelKind::rnn;
    spec.hidden = {};
    REQUIRE_THROWS_AS(spec.validate(), mtc::ConfigError);
    spec.hidden = {0};
    REQUIRE_THROWS_AS(spec.validate(), mtc::ConfigError);

    mtc::ModelSpec tcn;
    tcn.kind = mtc::ModelKind::tcn;
    tcn.window = 4; // shorter than the receptive field 8
    REQUIRE_THROWS_AS(tcn.validate(), mtc::ConfigError);
}
