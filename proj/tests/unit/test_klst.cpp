#include <doctest.h>

#include <cmath>
#include <random>

#include "properpo/json_io.hpp"
#include "properpo/klst.hpp"

using namespace properpo;

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

ChoiceTable fixture(const std::string& name) {
    return io::table_from_json(io::read_file(std::string(FIXTURE_DIR) + "/" + name));
}

ChoiceTable single(Mat P) {
    ChoiceTable t;
    t.probs = {std::move(P)};
    return t;
}

}  // namespace

TEST_CASE("table validation") {
    CHECK_NOTHROW(fixture("btl_table.json").validate());
    CHECK_THROWS_AS(single({{0.5, 0.8}, {0.3, 0.5}}).validate(), InvalidArgument);
    CHECK_THROWS_AS(single({{0.5, 1.2}, {0.0, 0.5}}).validate(), InvalidArgument);
    CHECK_THROWS_AS(single({{0.5, 0.5, 0.5}, {0.5, 0.5}}).validate(), InvalidArgument);
}

TEST_CASE("lottery expansion is bilinear") {
    const auto t = single({{0.5, 0.7, 0.2}, {0.3, 0.5, 0.6}, {0.8, 0.35, 0.5}});
    const double a = 0.3;
    const auto S = expand(t, a);
    CHECK(S.N == 9);
    const auto& P = t.probs[0];
    // (y1 y2)_a vs (y3 y4)_a, spelled out for one pair.
    const std::size_t L = 0 * 3 + 2, M = 1 * 3 + 1;
    const double oracle = a * a * P[0][1] + a * (1 - a) * P[0][1] + (1 - a) * a * P[2][1] + (1 - a) * (1 - a) * P[2][1];
    CHECK(S.probs[0][L][M] == doctest::Approx(oracle));
    // Degenerate lotteries reproduce the table.
    for (std::size_t y = 0; y < 3; ++y)
        for (std::size_t z = 0; z < 3; ++z) CHECK(S.probs[0][y * 4][z * 4] == doctest::Approx(P[y][z]));
    CHECK_THROWS_AS(expand(t, 1.0), InvalidArgument);
    CHECK(base_space(t).N == 3);
}

TEST_CASE("bearability") {
    const auto bad = fixture("bearability_violation.json");
    const auto v = check_bearability(base_space(bad));
    CHECK_FALSE(v.pass);
    REQUIRE(v.witness.size() == 1);
    const std::size_t y = v.witness[0];
    CHECK(2 * bad.probs[v.state][y][y] != doctest::Approx(1.0));
    CHECK(check_bearability(expand(fixture("btl_table.json"), 0.4)).pass);
}

TEST_CASE("wedge axiom") {
    const auto t = fixture("wedge_violation.json");
    const auto v = check_wedge_axiom(base_space(t));
    CHECK_FALSE(v.pass);
    REQUIRE(v.witness.size() == 3);
    const auto& P = t.probs[v.state];
    const std::size_t a = v.witness[0], c = v.witness[1], b = v.witness[2];
    // Both arms are edges with the same polarity; the closing pair abstains.
    CHECK(P[c][a] + P[a][c] == doctest::Approx(1.0));
    CHECK(P[c][b] + P[b][c] == doctest::Approx(1.0));
    CHECK(((P[c][a] >= 0.5 && P[c][b] >= 0.5) || (P[a][c] >= 0.5 && P[b][c] >= 0.5)));
    CHECK(P[a][b] + P[b][a] < 1.0 - 1e-6);
}

TEST_CASE("path axiom") {
    // 0 is preferred to 1 but the pair abstains and there is no detour.
    const auto t = single({{0.5, 0.6}, {0.3, 0.5}});
    const auto v = check_path_axiom(base_space(t));
    CHECK_FALSE(v.pass);
    CHECK(v.witness == std::vector<std::size_t>{0, 1});
    // With a third action the detour 0 > 2 > 1 exists.
    const auto d = single({{0.5, 0.6, 0.7}, {0.3, 0.5, 0.2}, {0.3, 0.8, 0.5}});
    CHECK(check_path_axiom(base_space(d)).pass);
}

TEST_CASE("monotonicity witness is a real violation") {
    const auto t = fixture("monotonicity_violation.json");
    const auto v = check_monotonicity(base_space(t));
    REQUIRE_FALSE(v.pass);
    REQUIRE(v.witness.size() == 6);
    const auto& P = t.probs[v.state];
    const auto& w = v.witness;
    CHECK(P[w[0]][w[1]] >= P[w[3]][w[4]] - 1e-12);
    CHECK(P[w[1]][w[2]] >= P[w[4]][w[5]] - 1e-12);
    const bool open = std::abs(P[w[3]][w[5]] + P[w[5]][w[3]] - 1.0) > 1e-9;
    CHECK((open || P[w[0]][w[2]] < P[w[3]][w[5]]));
}

TEST_CASE("linear link tables satisfy every axiom") {
    // F(z) = (1 + z) / 2 on utilities in [0, 1/2] keeps everything inside (0, 1).
    const Mat u{{0.0, 0.2, 0.45}};
    const auto t = generate_from_model(ScalarFn([](double z) { return 0.5 * (1 + z); }), u);
    const auto cert = verify_klst(t);
    CHECK(cert.pass);
    CHECK(cert.lcs.size() == default_lcs_alphas().size());
}

TEST_CASE("BTL with two actions passes") {
    const auto cert = verify_klst(fixture("btl_table.json"));
    CHECK(cert.pass);
    CHECK_FALSE(cert.monotonicity.sampled);
}

TEST_CASE("model generation") {
    const Mat u{{0.0, 1.0, -0.5}};
    const auto t = generate_from_model(ScalarFn(sigmoid), u);
    CHECK(t.probs[0][1][0] == doctest::Approx(sigmoid(1.0)));
    CHECK(t.probs[0][2][2] == doctest::Approx(0.5));
    const auto ab = generate_from_model(ScalarFn(sigmoid), u, [](std::size_t, std::size_t, std::size_t) { return 0.25; });
    CHECK(ab.probs[0][1][0] == doctest::Approx(0.75 * sigmoid(1.0)));
    const ScalarFn gumbel([](double z) { return 1 - std::exp(-std::exp(z)); });
    CHECK_THROWS_AS(generate_from_model(gumbel, u), ContractViolation);
}

TEST_CASE("Fechnerian fit recovers utility differences") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(-1.5, 1.5);
    Mat u(2, Vec(4));
    for (auto& row : u)
        for (auto& x : row) x = U(rng);
    const auto t = generate_from_model(ScalarFn(sigmoid), u);
    const auto rep = fit_representation(t);
    CHECK(rep.order_violations == 0);
    CHECK(rep.f_condition_at_knots);
    for (std::size_t x = 0; x < 2; ++x)
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 4; ++j) {
                CHECK(rep.u[x][i] - rep.u[x][j] == doctest::Approx(u[x][i] - u[x][j]).epsilon(1e-6));
                CHECK(rep.F(rep.u[x][i] - rep.u[x][j]) == doctest::Approx(t.probs[x][i][j]).epsilon(1e-6));
            }
    CHECK(rep.F(-1e6) >= 0.0);
    CHECK(rep.F(1e6) <= 1.0);
}
