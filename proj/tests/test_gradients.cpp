#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <memory>
#include <vector>

#include "mtc/network.hpp"
#include "mtc/rng.hpp"

namespace {

struct Problem {
    mtc::ModelSpec spec;
    int batch = 0;
    std::vector<double> x;
    std::vector<double> y_cls, m_cls, y_reg, m_reg;
};

Problem random_problem(mtc::ModelKind kind, std::uint64_t seed) {
    mtc::Rng rng(seed);
    Problem p;
    p.spec.kind = kind;
    if (kind == mtc::ModelKind::tcn) {
        p.spec.tcn_layers = 2 + static_cast<int>(rng.uniform_int(0, 1)); // r = 4 or 8
        p.spec.tcn_filters = 2 + static_cast<int>(rng.uniform_int(0, 4));
        p.spec.window = p.spec.receptive_field();
    } else {
        const int layers = 1 + static_cast<int>(rng.uniform_int(0, 1));
        p.spec.hidden.clear();
        for (int l = 0; l < layers; ++l)
            p.spec.hidden.push_back(2 + static_cast<int>(rng.uniform_int(0, 6)));
        p.spec.window = 2 + static_cast<int>(rng.uniform_int(0, 6));
    }
    p.batch = 3 + static_cast<int>(rng.uniform_int(0, 4));
    p.x.resize(static_cast<std::size_t>(p.batch) * p.spec.window);
    for (auto& v : p.x) v = rng.uniform(-1.0, 1.0);
    for (int b = 0; b < p.batch; ++b) {
        p.y_cls.push_back(rng.bernoulli(0.5) ? 1.0 : 0.0);
        p.m_cls.push_back(1.0);
        p.y_reg.push_back(rng.uniform(0.2, 3.0));
        p.m_reg.push_back(rng.bernoulli(0.7) ? 1.0 : 0.0);
    }
    return p;
}

/// Combined two-head RMSE with masks (mirrors the training loss).
double loss_of(mtc::SequenceModel& model, const Problem& p, std::vector<double>* dscore,
               std::vector<double>* dgap) {
    model.forward(p.x.data(), p.batch, false, nullptr);
    const auto& s = model.scores();
    const auto& g = model.gaps();
    double cls_sq = 0.0, reg_sq = 0.0, cls_n = 0.0, reg_n = 0.0;
    for (int b = 0; b < p.batch; ++b) {
        if (p.m_cls[b] > 0.0) {
            cls_sq += (s[b] - p.y_cls[b]) * (s[b] - p.y_cls[b]);
            cls_n += 1.0;
        }
        if (p.m_reg[b] > 0.0) {
            reg_sq += (g[b] - p.y_reg[b]) * (g[b] - p.y_reg[b]);
            reg_n += 1.0;
        }
    }
    const double rc = cls_n > 0 ? std::sqrt(cls_sq / cls_n) : 0.0;
    const double rr = reg_n > 0 ? std::sqrt(reg_sq / reg_n) : 0.0;
    if (dscore != nullptr) {
        dscore->assign(p.batch, 0.0);
        dgap->assign(p.batch, 0.0);
        for (int b = 0; b < p.batch; ++b) {
            if (p.m_cls[b] > 0.0 && rc > 0.0) (*dscore)[b] = (s[b] - p.y_cls[b]) / (cls_n * rc);
            if (p.m_reg[b] > 0.0 && rr > 0.0) (*dgap)[b] = (g[b] - p.y_reg[b]) / (reg_n * rr);
        }
    }
    return rc + rr;
}

double max_rel_error(mtc::ModelKind kind, std::uint64_t seed) {
    Problem p = random_problem(kind, seed);
    auto model = mtc::SequenceModel::create(p.spec);
    mtc::Rng init(seed ^ 0xabcdef);
    model->init_params(init);

    std::vector<double> dscore, dgap;
    loss_of(*model, p, &dscore, &dgap);
    std::vector<double> grad(model->params().size(), 0.0);
    model->backward(dscore.data(), dgap.data(), grad);

    const double h = 1e-5;
    double worst = 0.0;
    auto& params = model->params();
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double keep = params[i];
        params[i] = keep + h;
        const double lp = loss_of(*model, p, nullptr, nullptr);
        params[i] = keep - h;
        const double lm = loss_of(*model, p, nullptr, nullptr);
        params[i] = keep;
        const double fd = (lp - lm) / (2.0 * h);
        const double denom = std::max({std::fabs(grad[i]), std::fabs(fd), 1e-8});
        worst = std::max(worst, std::fabs(grad[i] - fd) / denom);
    }
    return worst;
}

} // namespace

TEST_CASE("analytic gradients match central finite differences") {
    const struct {
        mtc::ModelKind kind;
        const char* name;
    } cases[] = {{mtc::ModelKind::rnn, "rnn"},
                 {mtc::ModelKind::lstm, "lstm"},
                 {mtc::ModelKind::gru, "gru"},
                 {mtc::ModelKind::tcn, "tcn"}};
    for (const auto& c : cases) {
        SECTION(c.name) {
            for (std::uint64_t inst = 0; inst < 20; ++inst) {
                const double err = max_rel_error(c.kind, 1000 * inst + 17);
                INFO(c.name << " instance " << inst);
                REQUIRE(err < 1e-4);
            }
        }
    }
}

TEST_CASE("zero residual gives zero gradient") {
    for (auto kind : {mtc::ModelKind::rnn, mtc::ModelKind::lstm, mtc::ModelKind::gru,
                      mtc::ModelKind::tcn}) {
        Problem p = random_problem(kind, 5);
        auto model = mtc::SequenceModel::create(p.spec);
        // all-zero parameters; targets set to the model's own outputs
        model->forward(p.x.data(), p.batch, false, nullptr);
        for (int b = 0; b < p.batch; ++b) {
            p.y_cls[b] = model->scores()[b];
            p.y_reg[b] = model->gaps()[b];
        }
        std::vector<double> dscore, dgap;
        const double loss = loss_of(*model, p, &dscore, &dgap);
        REQUIRE(loss == 0.0);
        std::vector<double> grad(model->params().size(), 0.0);
        model->backward(dscore.data(), dgap.data(), grad);
        for (double g : grad) REQUIRE(g == 0.0);
    }
}

TEST_CASE("gradient vector length equals the parameter count") {
    for (auto kind : {mtc::ModelKind::rnn, mtc::ModelKind::lstm, mtc::ModelKind::gru,
                      mtc::ModelKind::tcn}) {
        Problem p = random_problem(kind, 9);
        auto model = mtc::SequenceModel::create(p.spec);
        mtc::Rng init(10);
        model->init_params(init);
        std::vector<double> dscore, dgap;
        loss_of(*model, p, &dscore, &dgap);
        std::vector<double> wrong(model->params().size() + 1, 0.0);
        REQUIRE_THROWS_AS(model->backward(dscore.data(), dgap.data(), wrong),
                          std::invalid_argument);
        std::vector<double> grad(model->params().size(), 0.0);
        model->backward(dscore.data(), dgap.data(), grad);
        REQUIRE(grad.size() == mtc::count_params(p.spec));
    }
}
