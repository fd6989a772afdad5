#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

#include "asv/fem.hpp"
#include "asv/report.hpp"

using namespace asv;

TEST_CASE("verify battery passes and echoes its configuration") {
    const VerifyReport report = run_verify(1, {4, 6});
    CHECK(report.seed == 1);
    CHECK(report.dims == std::vector<int>{4, 6});
    CHECK(report.checks.size() >= 12);
    CHECK(report.all_pass);
    for (const CheckResult& c : report.checks) {
        CHECK(c.pass);
        CHECK_FALSE(c.theorem.empty());
        CHECK(c.tol > 0.0);
    }
}

TEST_CASE("verify rejects invalid dimension lists") {
    CHECK_THROWS_AS((void)run_verify(1, {}), std::invalid_argument);
    CHECK_THROWS_AS((void)run_verify(1, {0}), std::invalid_argument);
    CHECK_THROWS_AS((void)run_verify(1, {4, 2}), std::invalid_argument);
}

TEST_CASE("verify honours the tolerance override") {
    const VerifyReport strict = run_verify(3, {4}, 1e-18);
    CHECK_FALSE(strict.all_pass);  // roundoff exceeds an absurdly tight gate
    const VerifyReport loose = run_verify(3, {4}, 1.0);
    CHECK(loose.all_pass);
}

TEST_CASE("verify report serialization is deterministic and well-formed") {
    const std::string first = to_json(run_verify(5, {4, 6}));
    const std::string second = to_json(run_verify(5, {4, 6}));
    CHECK(first == second);

    const nlohmann::json j = nlohmann::json::parse(first);
    CHECK(j.at("command") == "verify");
    CHECK(j.at("seed") == 5);
    CHECK(j.at("dims") == nlohmann::json({4, 6}));
    CHECK(j.at("all_pass") == true);
    REQUIRE(j.at("checks").is_array());
    for (const auto& e : j.at("checks")) {
        CHECK(e.at("theorem").is_string());
        CHECK(e.at("lhs").is_number());
        CHECK(e.at("rhs").is_number());
        CHECK(e.at("tol").is_number());
        CHECK(e.at("pass").is_boolean());
    }

    // a different seed draws different instances
    CHECK(to_json(run_verify(6, {4, 6})) != first);
}

TEST_CASE("study report gates the growth ratios") {
    std::vector<TriMesh> meshes;
    for (int m : {8, 16, 32}) meshes.push_back(structured_unit_square(m));

    const StudyReport aux = run_study(meshes, 1.25, StudyMode::aux_exact, 1.15);
    CHECK(aux.mode == "aux-exact");
    REQUIRE(aux.levels.size() == 3);
    REQUIRE(aux.ratios.size() == 2);
    CHECK(aux.gate_pass);
    for (double r : aux.ratios) CHECK(r <= 1.15);

    const StudyReport jac = run_study(meshes, 1.25, StudyMode::jacobi_only, 1.15);
    CHECK(jac.mode == "jacobi");
    CHECK_FALSE(jac.gate_pass);
    for (double r : jac.ratios) CHECK(r > 3.0);

    CHECK_THROWS_AS((void)run_study({}, 1.25, StudyMode::aux_exact, 1.15),
                    std::invalid_argument);
}

TEST_CASE("single-level study emits no ratios and passes vacuously") {
    const StudyReport one =
        run_study({structured_unit_square(8)}, 1.25, StudyMode::aux_exact, 1.15);
    CHECK(one.levels.size() == 1);
    CHECK(one.ratios.empty());
    CHECK(one.gate_pass);
}

TEST_CASE("study report serialization carries the level table") {
    std::vector<TriMesh> meshes;
    for (int m : {8, 16}) meshes.push_back(structured_unit_square(m));
    const StudyReport study = run_study(meshes, 1.25, StudyMode::jacobi_only, 1.15);
    const nlohmann::json j = nlohmann::json::parse(to_json(study));

    CHECK(j.at("command") == "auxgrid");
    CHECK(j.at("mode") == "jacobi");
    CHECK(j.at("gate") == doctest::Approx(1.15));
    REQUIRE(j.at("levels").size() == 2);
    CHECK(j.at("levels")[0].at("ratio").is_null());
    CHECK(j.at("levels")[0].at("kappa_B0A0").is_null());  // no grid in this mode
    CHECK(j.at("levels")[1].at("ratio").get<double>() ==
          doctest::Approx(study.ratios[0]).epsilon(1e-14));
    CHECK(j.at("levels")[0].at("dim") == 49);
    CHECK(j.at("levels")[1].at("kappa_BA").get<double>() ==
          doctest::Approx(study.levels[1].kappa_ba).epsilon(1e-14));
    CHECK(j.at("gate_pass") == false);
}
