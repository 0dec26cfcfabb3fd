#include <catch2/catch_amalgamated.hpp>

#include "ptav/config.hpp"

using namespace ptav;

TEST_CASE("config text parses sections, comments and blanks") {
    const ConfigMap m = parse_config_text(
        "# comment\n"
        "tracker.alpha = 0.25\n"
        "\n"
        "runtime.n_int = 5   # trailing comment\n"
        "verifier.score_mode = literal-sum\n");
    REQUIRE(m.at("tracker.alpha") == "0.25");
    REQUIRE(m.at("runtime.n_int") == "5");
    REQUIRE(m.at("verifier.score_mode") == "literal-sum");
}

TEST_CASE("unknown keys are rejected") {
    REQUIRE_THROWS_AS(parse_config_text("tracker.bogus = 1\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_text("alpha = 1\n"), ConfigError);
    REQUIRE_THROWS_AS(merge_configs({}, {{"no.such.key", "1"}}), ConfigError);
}

TEST_CASE("flag overrides win over file values") {
    ConfigMap base = parse_config_text("tracker.alpha = 0.25\nruntime.n_int = 5\n");
    const ConfigMap merged = merge_configs(base, {{"tracker.alpha", "0.5"}});
    const PtavOptions opt = build_options(merged);
    REQUIRE(opt.tracker.alpha == 0.5);
    REQUIRE(opt.runtime.n_int_init == 5);
}

TEST_CASE("typed option building applies defaults and validation") {
    const PtavOptions defaults = build_options({});
    REQUIRE(defaults.tracker.alpha == 0.3);
    REQUIRE(defaults.verifier.tau0 == 0.6);
    REQUIRE(defaults.verifier.tau1 == 0.33);
    REQUIRE(defaults.verifier.tau2 == 0.53);
    REQUIRE(defaults.verifier.gamma_init == 1.5);
    REQUIRE(defaults.runtime.n_int_init == 10);
    REQUIRE(defaults.runtime.effective_delta() == 25);

    SECTION("bad values become config errors") {
        REQUIRE_THROWS_AS(build_options({{"tracker.alpha", "2.0"}}), ConfigError);
        REQUIRE_THROWS_AS(build_options({{"tracker.alpha", "abc"}}), ConfigError);
        REQUIRE_THROWS_AS(build_options({{"runtime.mode", "sideways"}}), ConfigError);
        REQUIRE_THROWS_AS(build_options({{"runtime.n_int", "0"}}), ConfigError);
        REQUIRE_THROWS_AS(build_options({{"verifier.tau1", "0.9"}}), ConfigError);  // > tau2
        REQUIRE_THROWS_AS(build_options({{"runtime.delta", "3"}}), ConfigError);  // < n_int+1
    }
    SECTION("verifier none disables the verifying loop") {
        const PtavOptions opt = build_options({{"verifier.embedder", "none"}});
        REQUIRE_FALSE(opt.runtime.verifier_enabled);
    }
    SECTION("scale factor lists parse") {
        const PtavOptions opt = build_options({{"tracker.scale_factors", "0.97,1.0,1.03"}});
        REQUIRE(opt.tracker.scale_factors == std::vector<double>{0.97, 1.0, 1.03});
    }
    SECTION("a zero failure threshold is allowed to disable failures") {
        const PtavOptions opt = build_options({{"verifier.tau1", "0"}});
        REQUIRE(opt.verifier.tau1 == 0.0);
    }
}
