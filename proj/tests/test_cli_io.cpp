#include <doctest.h>

#include "doubles.hpp"
#include "gaitcont/cli.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

using namespace gaitcont;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "gaitcont_tests";
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

int cli(const std::vector<std::string>& args, std::string* text = nullptr) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    if (text) *text = out.str() + err.str();
    return code;
}

const std::string kConfigs = GAITCONT_CONFIG_DIR;

// Small passive archive shared by several cases.
const fs::path& small_archive() {
    static const fs::path path = [] {
        const fs::path p = scratch("small.json");
        REQUIRE(cli({"trace", "--model", kConfigs + "/passive.json", "--count", "6", "--out", p.string()}) == 0);
        return p;
    }();
    return path;
}

}  // namespace

TEST_CASE("archive round trip is bit exact") {
    const std::string text = slurp(small_archive());
    const FamilyArchive ar = read_archive(text);
    CHECK(write_archive(ar) == text);
    const FamilyArchive again = read_archive(write_archive(ar));
    REQUIRE(again.branches.size() == ar.branches.size());
    for (std::size_t b = 0; b < ar.branches.size(); ++b)
        for (std::size_t i = 0; i < ar.branches[b].gaits.size(); ++i) {
            const GaitRecord& x = ar.branches[b].gaits[i];
            const GaitRecord& y = again.branches[b].gaits[i];
            CHECK(x.gait.to_vector() == y.gait.to_vector());
            CHECK(x.residual_norm == y.residual_norm);
            CHECK(x.slope == y.slope);
        }
    CHECK(ar.gait_count() == 4 * 6);
    CHECK(ar.schema_version == kArchiveSchemaVersion);
}

TEST_CASE("archive schema checks") {
    std::string text = slurp(small_archive());
    CHECK_THROWS_AS(read_archive(std::regex_replace(text, std::regex("\"schema_version\": 1"), "\"schema_version\": 7")),
                    InputError);
    CHECK_THROWS_AS(read_archive(std::regex_replace(text, std::regex("\"schema_version\": 1,"), "")), InputError);
    CHECK_THROWS_AS(read_archive("{"), InputError);
}

TEST_CASE("identical inputs give byte-identical archives") {
    const fs::path p = scratch("again.json");
    REQUIRE(cli({"trace", "--model", kConfigs + "/passive.json", "--count", "6", "--out", p.string()}) == 0);
    CHECK(slurp(p) == slurp(small_archive()));
}

TEST_CASE("audit recomputes stored residuals") {
    const FamilyArchive ar = load_archive(small_archive().string());
    const AuditResult r = audit_archive(*archive_model(ar), ar);
    CHECK(r.ok());
    CHECK(r.max_residual < 1e-8);
    CHECK(r.max_mismatch <= 1e-12);
    CHECK(cli({"audit", "--archive", small_archive().string()}) == 0);

    FamilyArchive bad = ar;
    bad.branches[0].gaits[3].residual_norm += 1e-6;
    const fs::path p = scratch("tampered.json");
    save_archive(bad, p.string());
    CHECK_FALSE(audit_archive(*archive_model(bad), bad).ok());
    CHECK(cli({"audit", "--archive", p.string()}) == 1);
}

TEST_CASE("csv export has one row per gait") {
    const FamilyArchive ar = load_archive(small_archive().string());
    const std::string csv = export_csv(ar);
    std::size_t lines = 0;
    for (char ch : csv) lines += ch == '\n';
    CHECK(lines == ar.gait_count() + 1);
    CHECK(csv.rfind("branch,index,level,q1,q2,qdot1,qdot2,tau,", 0) == 0);
}

TEST_CASE("svg export marks both singular gaits") {
    const std::string svg = export_svg(load_archive(small_archive().string()));
    const std::regex marker("class=\"singular\" data-tau=\"([0-9.]+)\"");
    std::vector<double> taus;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), marker); it != std::sregex_iterator(); ++it)
        taus.push_back(std::stod((*it)[1]));
    REQUIRE(taus.size() == 2);
    CHECK(std::abs(taus[0] - 0.62) < 0.01);
    CHECK(std::abs(taus[1] - 0.68) < 0.01);
    CHECK(svg.find("class=\"equilibrium\"") != std::string::npos);
    CHECK(svg.find("class=\"branch\"") != std::string::npos);
}

TEST_CASE("animation frames") {
    CompassGait model;
    FamilyArchive ar;
    ar.model = describe_model_json(model);
    ar.dims = model.dims();
    Branch br;
    br.label = "eq";
    GaitRecord eq;
    eq.gait = GaitPoint{RobotState(Vec::Zero(2), Vec::Zero(2)), 0.5, Vec()};
    br.gaits.push_back(eq);
    ar.branches.push_back(br);
    const auto j = nlohmann::json::parse(export_frames(model, ar, 60.0));
    const auto& frames = j.at("gaits").at(0).at("frames");
    CHECK(frames.size() == 31);
    for (const auto& f : frames) CHECK(f.at("q") == frames.at(0).at("q"));

    const FamilyArchive traced = load_archive(small_archive().string());
    const auto k = nlohmann::json::parse(export_frames(model, traced, 60.0));
    CHECK(k.at("fps") == 60.0);
    CHECK(k.at("gaits").size() == traced.gait_count());
    const auto& g = k.at("gaits").at(5);
    CHECK(g.at("frames").size() == static_cast<std::size_t>(std::floor(g.at("tau").get<double>() * 60 + 1e-9)) + 1);
}

TEST_CASE("model config round trip through the archive") {
    const std::string text = slurp(kConfigs + "/actuated.json");
    auto m = load_model_json(text);
    auto back = load_model_json(describe_model_json(*m));
    CHECK(back->name() == m->name());
    CHECK(back->parameters() == m->parameters());
    CHECK_THROWS_AS(load_model_json(R"({"model":"hexapod"})"), InputError);
    CHECK_THROWS_AS(load_model_json(R"({"masses":{"leg":-1}})"), InputError);
}

TEST_CASE("diagnostic report") {
    testing_doubles::DecoupledModel model;
    std::ostringstream os;
    const ScanOutcome r = run_scan(model, 0.1, 1.0, 20, os);
    CHECK(r.exit_code == kExitEmptyScan);
    CHECK(r.report.classification == ScanClass::ConstantZero);
    CHECK(os.str().find("constant-zero") != std::string::npos);
}

TEST_CASE("cli exit codes") {
    std::string text;
    CHECK(cli({"scan"}, &text) == 0);
    CHECK(text.find("2 singular equilibrium gaits") != std::string::npos);

    CHECK(cli({"scan", "--interval", "0.9,1.0"}, &text) == 2);
    CHECK(text.find("no-crossing") != std::string::npos);
    CHECK(text.find("Widen the window") != std::string::npos);

    CHECK(cli({"scan", "--model", "/nonexistent/model.json"}) == 1);
    CHECK(cli({"scan", "--interval", "1,0.5"}) == 1);
    CHECK(cli({"scan", "--interval", "abc"}) == 1);
    CHECK(cli({"frobnicate"}) == 1);
    CHECK(cli({}) == 1);
    CHECK(cli({"trace", "--count", "2"}) == 1);  // --out missing
    CHECK(cli({"trace", "--count", "2", "--interval", "0.9,1", "--out", scratch("empty.json").string()}) == 2);
    CHECK(cli({"trace", "--count", "2", "--out", "/nonexistent/dir/a.json"}) == 1);

    CHECK(cli({"export", "--archive", small_archive().string(), "--format", "png"}) == 1);
    CHECK(cli({"export", "--archive", scratch("missing.json").string()}) == 1);
    CHECK(cli({"export", "--archive", small_archive().string(), "--format", "csv", "--out",
               scratch("out.csv").string()}) == 0);
    CHECK(cli({"export", "--archive", small_archive().string(), "--format", "svg-bifurcation", "--out",
               scratch("out.svg").string()}) == 0);
    CHECK(cli({"export", "--archive", small_archive().string(), "--format", "animation-frames", "--out",
               scratch("frames.json").string()}) == 0);

    // query: satisfied reference, infeasible target, malformed file
    const FamilyArchive ar = load_archive(small_archive().string());
    const double s = ar.branches[2].gaits[4].slope;
    const fs::path sat = scratch("sat.json");
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  R"({"constraints":[{"quantity":"slope","op":"=","target":%.17g}],"reference":{"branch":2,"gait":4}})",
                  s);
    spit(sat, buf);
    CHECK(cli({"query", "--archive", small_archive().string(), "--query", sat.string()}, &text) == 0);
    CHECK(text.find("already satisfies") != std::string::npos);

    const fs::path far = scratch("far.json");
    spit(far, R"({"constraints":[{"quantity":"slope","op":"=","target":4.0}],"max_iterations":8,
                  "reference":{"branch":2,"gait":4}})");
    CHECK(cli({"query", "--archive", small_archive().string(), "--query", far.string()}, &text) == 3);
    CHECK(text.find("query failed") != std::string::npos);

    const fs::path junk = scratch("junk.json");
    spit(junk, "{");
    CHECK(cli({"query", "--archive", small_archive().string(), "--query", junk.string()}) == 1);
    CHECK(cli({"query", "--archive", small_archive().string(), "--query", sat.string(), "--seed-index", "9"}) == 1);
}

TEST_CASE("query appends its path to the archive") {
    const FamilyArchive ar = load_archive(small_archive().string());
    const double s = ar.branches[2].gaits[5].slope;
    const fs::path q = scratch("half.json");
    char buf[256];
    std::snprintf(buf, sizeof buf, R"({"constraints":[{"quantity":"slope","op":"=","target":%.17g}]})", 0.5 * s);
    spit(q, buf);
    const fs::path out = scratch("with_query.json");
    REQUIRE(cli({"query", "--archive", small_archive().string(), "--query", q.string(), "--seed-index", "2",
                 "--gait-index", "5", "--out", out.string()}) == 0);
    const FamilyArchive updated = load_archive(out.string());
    REQUIRE(updated.homotopy.size() == 1);
    const HomotopyRecord& h = updated.homotopy.front();
    CHECK(h.converged);
    CHECK(h.branch == 2);
    CHECK(h.gait == 5);
    CHECK(std::abs(archive_model(updated)->slope(h.root) - 0.5 * s) < 1e-8);
    CHECK(write_archive(read_archive(slurp(out))) == slurp(out));
}

TEST_CASE("surface command writes a two-level archive") {
    const fs::path p = scratch("surface.json");
    std::string text;
    REQUIRE(cli({"surface", "--model", kConfigs + "/actuated.json", "--count", "3", "--seed-index", "1", "--out",
                 p.string()},
                &text) == 0);
    const FamilyArchive ar = load_archive(p.string());
    bool has1 = false, has2 = false;
    for (const Branch& b : ar.branches) {
        has1 |= b.level == 1;
        has2 |= b.level == 2;
        for (const GaitRecord& g : b.gaits) CHECK(g.residual_norm < 1e-8);
    }
    CHECK(has1);
    CHECK(has2);
    CHECK(cli({"audit", "--archive", p.string()}) == 0);
}
