#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <doctest.h>
#include <nlohmann/json.hpp>

#include "rlab/harness.hpp"

namespace fs = std::filesystem;
using namespace rlab;

namespace {

const harness::CheckRecord* find_check(const harness::Report& rep, const std::string& name) {
    for (const auto& c : rep.checks) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

bool check_passed(const harness::Report& rep, const std::string& name) {
    const auto* c = find_check(rep, name);
    return c != nullptr && c->pass;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(bool(in));
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path out_dir(const std::string& leaf) {
    const fs::path p = fs::path("harness-out") / leaf;
    fs::create_directories(p);
    return p;
}

const char* kIdentityRecur = R"([scenario]
kind = "recur"
seed = 7

[operator]
kind = "identity"
field = "real"
p = 2.0
dim = 8

[recur]
n = 20
eps = 0.2
samples = 3
sample_mode = "unit"
expect = "nonempty"

[gate]
component = "full"
expect = true
)";

}  // namespace

TEST_CASE("scenario loading: kinds, seeds, overrides, and errors") {
    const auto cfg = harness::load_config_text(kIdentityRecur);
    CHECK(cfg.kind == "recur");
    CHECK(cfg.seed == 7);
    REQUIRE(cfg.op.has_value());
    CHECK(cfg.op->dim == 8);
    CHECK(cfg.op->kind == ops::OpKind::Identity);

    const auto forced = harness::load_config_text(kIdentityRecur, "orbit");
    CHECK(forced.kind == "orbit");
    const auto reseeded = harness::load_config_text(kIdentityRecur, "", 99);
    CHECK(reseeded.seed == 99);

    const char* no_kind = "[operator]\nkind = \"identity\"\ndim = 4\n";
    CHECK_THROWS_AS((void)harness::load_config_text(no_kind), std::invalid_argument);
    const auto rescued = harness::load_config_text(no_kind, "recur");
    CHECK(rescued.kind == "recur");

    CHECK_THROWS_AS((void)harness::load_config_text("[scenario]\nkind = \"warp\"\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS((void)harness::load_config_text("[scenario]\nkind = \"orbit\"\nseed = -4\n"),
                    std::invalid_argument);
}

TEST_CASE("admissibility review flags structural and parameter violations") {
    const char* bad_blocks = R"([scenario]
kind = "ctype-verify"

[operator]
kind = "ctype-wb"
field = "real"
p = 2.0
b = [0, 2, 5]
phi = [0, 0]
w = [1.0, 1.0, 1.0, 1.0, 1.0]
v = [0.0, 0.5]
)";
    const auto cfg = harness::load_config_text(bad_blocks);
    const auto violations = harness::validate(cfg);
    REQUIRE_FALSE(violations.empty());
    for (const auto& v : violations) CHECK(v.rfind("operator: ", 0) == 0);

    const char* bad_params = R"([scenario]
kind = "recur"

[operator]
kind = "identity"
field = "real"
p = 2.0
dim = 8

[recur]
sample_mode = "sideways"
eps = -1.0

[grid]
nx = 1

[subspace]
k = [4, 2]

[gate]
component = "left"
)";
    const auto cfg2 = harness::load_config_text(bad_params);
    const auto v2 = harness::validate(cfg2);
    CHECK(v2.size() >= 4);

    const auto good = harness::load_config_text(kIdentityRecur);
    CHECK(harness::validate(good).empty());
}

TEST_CASE("reports: byte-stable bodies, content digests, artifact files") {
    const auto cfg = harness::load_config_text(kIdentityRecur);
    const auto r1 = harness::run(cfg, out_dir("stability-a").string());
    const auto r2 = harness::run(cfg, out_dir("stability-b").string());
    CHECK(r1.pass);
    CHECK(r1.body_json() == r2.body_json());
    CHECK(r1.scenario == "recur");
    CHECK_FALSE(r1.config_digest.empty());

    // Artifacts land in the out directory.
    CHECK(fs::exists(out_dir("stability-a") / "report.json"));
    CHECK(fs::exists(out_dir("stability-a") / "returns.json"));
    const auto body = nlohmann::json::parse(slurp(out_dir("stability-a") / "report.json"));
    CHECK(body.contains("body"));
    CHECK(body["body"]["pass"] == true);
    CHECK(body["body"]["config_digest"] == r1.config_digest);

    // The digest tracks the exact text, not just its meaning.
    const std::string commented = std::string(kIdentityRecur) + "# trailing remark\n";
    const auto r3 = harness::run(harness::load_config_text(commented),
                                 out_dir("stability-c").string());
    CHECK(r3.config_digest != r1.config_digest);
    CHECK(check_passed(r1, "returns-found"));
    CHECK(check_passed(r1, "essential-disc-gate"));
    CHECK(check_passed(r1, "gate-dynamics-agreement"));
}

TEST_CASE("orbit scenario: bounded decay and norm crossings") {
    const char* decay = R"([scenario]
kind = "orbit"
seed = 1

[operator]
kind = "backward-shift"
field = "real"
p = 2.0
weight = 0.5
dim = 16

[orbit]
n = 10
initial_index = 8
max_norm = 1.0

[gate]
component = "full"
expect = true
)";
    const auto rep = harness::run(harness::load_config_text(decay), out_dir("orbit-decay").string());
    CHECK(rep.pass);
    CHECK(check_passed(rep, "orbit-horizon"));
    CHECK(check_passed(rep, "orbit-bounded"));
    CHECK(check_passed(rep, "essential-disc-gate"));
    CHECK(fs::exists(out_dir("orbit-decay") / "orbit.csv"));
    CHECK(fs::exists(out_dir("orbit-decay") / "orbit.json"));

    const char* grow = R"([scenario]
kind = "orbit"
seed = 1

[operator]
kind = "backward-shift"
field = "real"
p = 2.0
weight = 2.0
dim = 32

[orbit]
n = 12
initial_index = 31
divergence_bound = 1000.0
expect_crossed = true
)";
    const auto rep2 = harness::run(harness::load_config_text(grow), out_dir("orbit-grow").string());
    CHECK(rep2.pass);
    CHECK(check_passed(rep2, "norm-crossing"));
    const auto* crossing = find_check(rep2, "norm-crossing");
    REQUIRE(crossing != nullptr);
    CHECK(crossing->measured == 10.0);  // 2^10 is the first norm past 1000
}

TEST_CASE("recur scenario: pair samples certify emptiness and the gate agrees") {
    const char* pair = R"([scenario]
kind = "recur"
seed = 3

[operator]
kind = "direct-sum"
field = "real"
p = 2.0

[operator.left]
kind = "backward-shift"
weight = 2.0
dim = 8

[operator.right]
kind = "scalar-mul"
lambda_re = 0.5
dim = 8

[recur]
n = 40
eps = 0.2
samples = 4
sample_mode = "pair_unit"
expect = "empty"

[gate]
component = "left"
expect = false
)";
    const auto rep = harness::run(harness::load_config_text(pair), out_dir("recur-pair").string());
    CHECK(rep.pass);
    CHECK(check_passed(rep, "no-returns"));
    CHECK(check_passed(rep, "essential-disc-gate"));
    CHECK(check_passed(rep, "gate-dynamics-agreement"));

    const auto returns = nlohmann::json::parse(slurp(out_dir("recur-pair") / "returns.json"));
    CHECK(returns["samples"].size() == 4);
    for (const auto& s : returns["samples"]) CHECK(s["count"] == 0);
}

TEST_CASE("ctype-verify scenario: decomposition, periods, selection, witness") {
    const char* text = R"([scenario]
kind = "ctype-verify"
seed = 5

[operator]
kind = "ctype-full"
field = "real"
p = 2.0
preset = "capped-doubling"
blocks = 4

[subspace]
k = [2, 4]
m_bound = 2.0

[witness]
threshold = 1e6
expect_witnessed = false
)";
    const auto rep = harness::run(harness::load_config_text(text), out_dir("ctype-small").string());
    CHECK(rep.pass);
    CHECK(check_passed(rep, "structure-admissible"));
    CHECK(check_passed(rep, "decomposition-exact"));
    CHECK(check_passed(rep, "half-period-negation"));
    CHECK(check_passed(rep, "full-period-return"));
    CHECK(check_passed(rep, "restricted-power-bound"));
    CHECK(check_passed(rep, "inverse-growth-witness"));
    CHECK(check_passed(rep, "witness-crosscheck"));
    CHECK_FALSE(rep.warnings.empty());  // finite-fiber caveat is always stated

    const auto witness = nlohmann::json::parse(slurp(out_dir("ctype-small") / "witness.json"));
    CHECK(witness["verdict"] == "not witnessed up to truncation");
    CHECK(witness["rows"].size() == 4);
}

TEST_CASE("subspace build, verify, and claim scenarios share a certificate") {
    const char* text = R"([scenario]
kind = "subspace-build"
seed = 11

[operator]
kind = "ctype-full"
field = "real"
p = 2.0
preset = "capped-doubling"
blocks = 8

[subspace]
k = [2, 4, 8]
m_bound = 2.0
steps = 3
samples = 5
eps = 1e-3
cert = "cert.json"
)";
    const auto build_dir = out_dir("subspace-chain");
    const auto cfg = harness::load_config_text(text);
    const auto built = harness::run(cfg, build_dir.string());
    CHECK(built.pass);
    CHECK(check_passed(built, "restricted-power-bound"));
    CHECK(check_passed(built, "dual-bound"));
    CHECK(check_passed(built, "perturbation-sum"));
    CHECK(check_passed(built, "extraction-consistency"));
    CHECK(check_passed(built, "certificate-verified"));
    CHECK(check_passed(built, "majorant-domination"));
    REQUIRE(fs::exists(build_dir / "cert.json"));

    // Re-verification from the written certificate, same out directory.
    const auto verified = harness::run(harness::load_config_text(text, "subspace-verify"),
                                       build_dir.string());
    CHECK(verified.pass);
    CHECK(check_passed(verified, "certificate-verified"));
    CHECK(check_passed(verified, "majorant-domination"));

    // The recursive-construction scenario on the same config.
    const auto claimed = harness::run(harness::load_config_text(text, "claim-run"),
                                      out_dir("claim-chain").string());
    CHECK(claimed.pass);
    CHECK(check_passed(claimed, "powers-subsequence"));
    CHECK(check_passed(claimed, "ledger-within-bounds"));
    CHECK(check_passed(claimed, "perturbation-sum"));
    CHECK(check_passed(claimed, "certificate-verified"));
    CHECK(fs::exists(out_dir("claim-chain") / "cert.json"));
}

TEST_CASE("grid scenario: inside collapse and outside floor") {
    const char* text = R"([scenario]
kind = "spectra-grid"
seed = 2

[operator]
kind = "backward-shift"
field = "real"
p = 2.0
weight = 2.0
dim = 32

[grid]
d = 16
re0 = -2.2
re1 = 2.2
im0 = -2.2
im1 = 2.2
nx = 8
ny = 8
inside_radius = 1.0
inside_bound = 0.1
outside_radius = 2.5
norm_bound = 2.0
)";
    const auto rep = harness::run(harness::load_config_text(text), out_dir("grid-shift").string());
    CHECK(rep.pass);
    CHECK(check_passed(rep, "resolvent-blowup-inside"));
    CHECK(check_passed(rep, "triangle-floor-outside"));
    REQUIRE(fs::exists(out_dir("grid-shift") / "grid.csv"));
    const auto csv = slurp(out_dir("grid-shift") / "grid.csv");
    CHECK(csv.rfind("re,im,sigma_min", 0) == 0);
    // Deterministic artifact: a second run writes the identical surface.
    const auto rep2 = harness::run(harness::load_config_text(text), out_dir("grid-again").string());
    CHECK(slurp(out_dir("grid-again") / "grid.csv") == csv);
    CHECK(rep2.body_json() == rep.body_json());
}

TEST_CASE("run refuses configs that fail the review") {
    const char* bad = R"([scenario]
kind = "ctype-verify"

[operator]
kind = "ctype-wb"
field = "real"
p = 2.0
b = [0, 2, 5]
phi = [0, 0]
w = [1.0, 1.0, 1.0, 1.0, 1.0]
v = [0.0, 0.5]
)";
    try {
        (void)harness::run(harness::load_config_text(bad), out_dir("refused").string());
        FAIL("run should have refused the config");
    } catch (const std::invalid_argument& ex) {
        CHECK(std::string(ex.what()).find("does not validate") != std::string::npos);
    }
}
