// End-to-end tests of the command-line binary: each case invokes the real
// executable, then checks exit codes, the one-line JSON summary on stdout,
// the structured JSON error on stderr, and the files written to --out.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "volcast/calendar.hpp"
#include "volcast/garch.hpp"
#include "volcast/marketdata.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace volcast;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() /
                     ("volcast_cli_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path out = work_dir() / ("stdout." + std::to_string(counter));
    const fs::path err = work_dir() / ("stderr." + std::to_string(counter));
    ++counter;
    const std::string cmd = std::string(VOLCAST_CLI_PATH) + " " + args + " >" +
                            out.string() + " 2>" + err.string();
    const int status = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string q(const json& j) { return "'" + j.dump() + "'"; }

int count_lines(const std::string& text) {
    int n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

}  // namespace

TEST_CASE("running without a subcommand fails with usage help") {
    const CliResult r = run_cli("");
    CHECK(r.exit_code != 0);
    CHECK(r.err.find("subcommand") != std::string::npos);
}

TEST_CASE("simulate-gbm writes a loadable CSV, deterministic per seed") {
    const fs::path a = work_dir() / "gbm_a.csv";
    const fs::path b = work_dir() / "gbm_b.csv";
    const fs::path c = work_dir() / "gbm_c.csv";
    const json cfg = {{"sigma_daily", 0.015},
                     {"n_steps", 40},
                     {"n_days", 30},
                     {"stock_id", "SIM1"},
                     {"start", "2016-01-04"}};
    const CliResult ra =
        run_cli("simulate-gbm --config " + q(cfg) + " --seed 9 --out " + a.string());
    REQUIRE(ra.exit_code == 0);
    const json summary = json::parse(ra.out);
    CHECK(summary.at("command") == "simulate-gbm");
    CHECK(summary.at("n_days") == 30);

    run_cli("simulate-gbm --config " + q(cfg) + " --seed 9 --out " + b.string());
    run_cli("simulate-gbm --config " + q(cfg) + " --seed 10 --out " + c.string());
    CHECK(slurp(a) == slurp(b));       // same seed, identical bytes
    CHECK(slurp(a) != slurp(c));       // different seed, different path

    const PriceSeries series = load_ohlc_csv(a.string());
    REQUIRE(series.bars.size() == 30);
    CHECK(series.stock_id == "gbm_a");  // CSV carries no id; the stem names it
    CHECK(json::parse(ra.out).at("stock_id") == "SIM1");
    CHECK(series.bars.front().date == Date{2016, 1, 4});
    CHECK(series.bars.front().open == doctest::Approx(100.0));
    for (const OhlcBar& bar : series.bars) {
        CHECK_NOTHROW(validate_bar(bar));
        const int wd = weekday(bar.date);
        CHECK(wd >= 1);
        CHECK(wd <= 5);
    }
    // Bars chain: each day opens at the previous close.
    for (std::size_t i = 1; i < series.bars.size(); ++i)
        CHECK(series.bars[i].open ==
              doctest::Approx(series.bars[i - 1].close).epsilon(1e-12));
}

TEST_CASE("estimate reproduces the library's range estimators") {
    const fs::path prices = work_dir() / "est_prices.csv";
    const json sim = {{"sigma_daily", 0.02}, {"n_steps", 30}, {"n_days", 12}};
    REQUIRE(run_cli("simulate-gbm --config " + q(sim) + " --seed 4 --out " +
                    prices.string())
                .exit_code == 0);
    const PriceSeries series = load_ohlc_csv(prices.string());

    const fs::path out = work_dir() / "est.tsv";
    const json cfg = {{"prices", prices.string()}, {"estimator", "parkinson"}};
    const CliResult r =
        run_cli("estimate --config " + q(cfg) + " --out " + out.string());
    REQUIRE(r.exit_code == 0);
    CHECK(json::parse(r.out).at("rows") == 12);

    std::ifstream tsv(out);
    std::string line;
    REQUIRE(std::getline(tsv, line));
    CHECK(line == "date\tvariance");
    for (const OhlcBar& bar : series.bars) {
        REQUIRE(std::getline(tsv, line));
        const auto tab = line.find('\t');
        CHECK(line.substr(0, tab) == format_date(bar.date));
        CHECK(std::stod(line.substr(tab + 1)) ==
              doctest::Approx(parkinson(bar).variance).epsilon(1e-9));
    }

    // The squared-return variant drops the first bar (no prior close).
    const json cfg2 = {{"prices", prices.string()}, {"estimator", "squared_return"}};
    const CliResult r2 =
        run_cli("estimate --config " + q(cfg2) + " --out " + out.string());
    REQUIRE(r2.exit_code == 0);
    CHECK(json::parse(r2.out).at("rows") == 11);
}

TEST_CASE("garch-fit and garch-forecast round-trip through files") {
    // Simulated GARCH returns passed inline keep the fit well-identified.
    const GarchParams truth{0.0, 5e-6, 0.10, 0.80};
    const std::vector<double> returns = simulate_garch(truth, 4000, 77);
    json fit_cfg;
    fit_cfg["returns"] = returns;
    const fs::path cfg_file = work_dir() / "fit_cfg.json";
    {
        std::ofstream out(cfg_file);
        out << fit_cfg.dump();
    }
    const fs::path fit_file = work_dir() / "fit.json";
    const CliResult rf = run_cli("garch-fit --config " + cfg_file.string() +
                                 " --out " + fit_file.string());
    REQUIRE(rf.exit_code == 0);
    const json fit_summary = json::parse(rf.out);
    CHECK(fit_summary.at("n_returns") == 4000);
    CHECK(fit_summary.at("converged") == true);

    const GarchParams est = params_from_json(slurp(fit_file));
    CHECK(est.a1 == doctest::Approx(truth.a1).epsilon(0.5));
    CHECK(est.b1 == doctest::Approx(truth.b1).epsilon(0.2));

    // Forecast from the saved fit over a simulated price file.
    const fs::path prices = work_dir() / "fc_prices.csv";
    const json sim = {{"sigma_daily", 0.02}, {"n_steps", 30}, {"n_days", 60}};
    REQUIRE(run_cli("simulate-gbm --config " + q(sim) + " --seed 2 --out " +
                    prices.string())
                .exit_code == 0);
    const fs::path fc_file = work_dir() / "fc.json";
    const json fc_cfg = {{"fit", fit_file.string()},
                         {"prices", prices.string()},
                         {"horizon", 7}};
    const CliResult rc = run_cli("garch-forecast --config " + q(fc_cfg) +
                                 " --out " + fc_file.string());
    REQUIRE(rc.exit_code == 0);
    const json fc = json::parse(slurp(fc_file));
    REQUIRE(fc.at("expected_variance").size() == 7);
    CHECK(fc.at("one_step") == fc.at("expected_variance")[0]);
    CHECK(fc.at("unconditional_variance").get<double>() > 0);
    // Forecasts decay monotonically toward the long-run level.
    const double u = fc.at("unconditional_variance").get<double>();
    double prev_gap = std::abs(fc.at("expected_variance")[0].get<double>() - u);
    for (int t = 1; t < 7; ++t) {
        const double gap =
            std::abs(fc.at("expected_variance")[t].get<double>() - u);
        CHECK(gap <= prev_gap + 1e-18);
        prev_gap = gap;
    }
}

TEST_CASE("ingest and align report accepted, rejected, and aligned days") {
    const fs::path heads = work_dir() / "heads.jsonl";
    {
        std::ofstream out(heads);
        out << R"({"stock":"AAA","utc":"2016-03-01T14:10:00Z","text":"AAA shares rally on earnings"})"
            << "\n"
            << R"({"stock":"AAA","utc":"2016-03-01T21:30:00Z","text":"Analysts weigh AAA outlook"})"
            << "\n"
            << R"({"stock":"BBB","utc":"2016-03-04T22:10:00Z","text":"BBB misses revenue estimates"})"
            << "\n"
            << "{broken\n";
    }

    const fs::path norm = work_dir() / "norm.jsonl";
    const json icfg = {{"headlines", heads.string()}};
    const CliResult ri =
        run_cli("ingest --config " + q(icfg) + " --out " + norm.string());
    REQUIRE(ri.exit_code == 0);
    const json isum = json::parse(ri.out);
    CHECK(isum.at("accepted") == 3);
    CHECK(isum.at("rejected") == 1);
    CHECK(count_lines(slurp(norm)) == 3);

    const fs::path aligned = work_dir() / "aligned.jsonl";
    const CliResult ra =
        run_cli("align --config " + q(icfg) + " --out " + aligned.string());
    REQUIRE(ra.exit_code == 0);
    const json asum = json::parse(ra.out);
    CHECK(asum.at("stocks") == 2);
    CHECK(asum.at("days") == 3);
    CHECK(asum.at("histogram").at("before_market") == 1);
    CHECK(asum.at("histogram").at("after_market") == 2);

    // A 21:30Z headline lands on the NEXT trading day; Friday evening -> Monday.
    std::map<std::string, std::string> date_of;  // first headline text -> date
    std::istringstream lines(slurp(aligned));
    std::string line;
    while (std::getline(lines, line)) {
        const json j = json::parse(line);
        date_of[j.at("texts")[0].get<std::string>()] =
            j.at("date").get<std::string>();
    }
    CHECK(date_of.at("AAA shares rally on earnings") == "2016-03-01");
    CHECK(date_of.at("Analysts weigh AAA outlook") == "2016-03-02");
    CHECK(date_of.at("BBB misses revenue estimates") == "2016-03-07");
}

TEST_CASE("build-dataset, train, predict, and evaluate chain together") {
    const fs::path dir = work_dir();
    const json model = {{"d_w", 8},  {"n", 4},    {"d_s", 8},  {"d_a", 4},
                        {"window", 5}, {"l_n", 2}, {"l_s", 4},  {"d_mn", 6},
                        {"d_mp", 6},  {"d_e", 2},  {"d_jr", 8}};
    json bcfg;
    bcfg["planted"] = {{"n_stocks", 3}, {"n_days", 160}, {"shock_prob", 0.2}};
    bcfg["model"] = model;
    bcfg["vocab_out"] = (dir / "vocab.json").string();
    bcfg["universe_out"] = (dir / "universe.tsv").string();
    bcfg["prices_out"] = (dir / "prices").string();

    const fs::path data = dir / "data.jsonl";
    const CliResult rb =
        run_cli("build-dataset --config " + q(bcfg) + " --seed 11 --out " +
                data.string());
    REQUIRE(rb.exit_code == 0);
    const json bsum = json::parse(rb.out);
    CHECK(bsum.at("stocks") == 3);
    const int n_train = bsum.at("train").get<int>();
    const int n_val = bsum.at("validation").get<int>();
    const int n_test = bsum.at("test").get<int>();
    CHECK(n_train > n_val);
    CHECK(n_val > 0);
    CHECK(n_test > 0);
    // Per stock: the first `window` days and the last day produce no sample.
    CHECK(bsum.at("skipped_history") == 3 * 6);
    CHECK(n_train + n_val + n_test == 3 * 160 - 3 * 6);

    json mcfg = model;
    mcfg["n_stocks"] = 3;
    json tcfg;
    tcfg["model"] = mcfg;
    tcfg["dataset"] = data.string();
    tcfg["vocab"] = (dir / "vocab.json").string();
    tcfg["train"] = {{"max_epochs", 4}, {"patience", 3}, {"lr", 0.003}};
    const fs::path ckpt = dir / "model.ckpt";
    const CliResult rt = run_cli("train --config " + q(tcfg) +
                                 " --seed 5 --out " + ckpt.string());
    REQUIRE(rt.exit_code == 0);
    const json tsum = json::parse(rt.out);
    CHECK(tsum.at("epochs") == 4);
    CHECK(tsum.at("history").size() == 4);
    CHECK(!tsum.contains("diverged"));  // only reported when training blows up
    CHECK(std::isfinite(tsum.at("best_val_mse").get<double>()));

    const fs::path pred = dir / "pred.tsv";
    const json pcfg = {{"checkpoint", ckpt.string()},
                       {"dataset", data.string()},
                       {"split", "test"}};
    const CliResult rp =
        run_cli("predict --config " + q(pcfg) + " --out " + pred.string());
    REQUIRE(rp.exit_code == 0);
    const json psum = json::parse(rp.out);
    CHECK(psum.at("n") == n_test);
    const std::string pred_text = slurp(pred);
    CHECK(pred_text.rfind(
              "stock_id\tdate\tforecast\tgarman_klass_vol\tparkinson_vol\n",
              0) == 0);
    CHECK(count_lines(pred_text) == n_test + 1);

    const fs::path eval = dir / "eval.tsv";
    json ecfg;
    ecfg["dataset"] = data.string();
    ecfg["models"] = json::array(
        {{{"name", "full"}, {"checkpoint", ckpt.string()}}});
    ecfg["garch"] = {{"universe", (dir / "universe.tsv").string()},
                     {"prices_dir", (dir / "prices").string()}};
    const CliResult re =
        run_cli("evaluate --config " + q(ecfg) + " --out " + eval.string());
    REQUIRE(re.exit_code == 0);
    const json esum = json::parse(re.out);
    CHECK(esum.at("models") == json::array({"full", "garch"}));
    const std::string eval_text = slurp(eval);
    CHECK(eval_text.rfind("model\tproxy\tsector\tn\tmse\tmae\tr2\t"
                          "mz_intercept\tmz_slope\n",
                          0) == 0);
    // 2 models x 2 proxies x (overall + 3 sectors) rows plus the header.
    CHECK(count_lines(eval_text) == 2 * 2 * 4 + 1);
    CHECK(eval_text.find("\tgarman_klass\tall\t") != std::string::npos);
    CHECK(eval_text.find("garch\tparkinson\tall\t") != std::string::npos);

    // A checkpoint with mismatched dimensions is rejected up front.
    json bad = ecfg;
    bad["models"][0]["name"] = "wrong";
    json other_model = model;
    other_model["window"] = 7;
    // Build a second dataset with a different window to get a real mismatch.
    json bcfg2 = bcfg;
    bcfg2["model"] = other_model;
    bcfg2.erase("vocab_out");
    bcfg2.erase("universe_out");
    bcfg2.erase("prices_out");
    const fs::path data2 = dir / "data2.jsonl";
    REQUIRE(run_cli("build-dataset --config " + q(bcfg2) + " --seed 11 --out " +
                    data2.string())
                .exit_code == 0);
    bad["dataset"] = data2.string();
    const CliResult rbad = run_cli("evaluate --config " + q(bad) + " --out " +
                                   (dir / "bad.tsv").string());
    CHECK(rbad.exit_code == 1);
    const json err = json::parse(rbad.err);
    CHECK(err.at("command") == "evaluate");
    CHECK(err.at("error").get<std::string>().find("does not match") !=
          std::string::npos);
}

TEST_CASE("train is reproducible for a fixed seed") {
    const fs::path dir = work_dir();
    const json model = {{"d_w", 8},  {"n", 4},    {"d_s", 8},  {"d_a", 4},
                        {"window", 5}, {"l_n", 2}, {"l_s", 4},  {"d_mn", 6},
                        {"d_mp", 6},  {"d_e", 2},  {"d_jr", 8}};
    json bcfg;
    bcfg["planted"] = {{"n_stocks", 2}, {"n_days", 120}};
    bcfg["model"] = model;
    bcfg["vocab_out"] = (dir / "rep_vocab.json").string();
    const fs::path data = dir / "rep_data.jsonl";
    REQUIRE(run_cli("build-dataset --config " + q(bcfg) + " --seed 3 --out " +
                    data.string())
                .exit_code == 0);

    json mcfg = model;
    mcfg["n_stocks"] = 2;
    json tcfg;
    tcfg["model"] = mcfg;
    tcfg["dataset"] = data.string();
    tcfg["vocab"] = (dir / "rep_vocab.json").string();
    tcfg["train"] = {{"max_epochs", 3}, {"patience", 3}};

    const CliResult r1 = run_cli("train --config " + q(tcfg) + " --seed 21 --out " +
                                 (dir / "rep_a.ckpt").string());
    const CliResult r2 = run_cli("train --config " + q(tcfg) + " --seed 21 --out " +
                                 (dir / "rep_b.ckpt").string());
    const CliResult r3 = run_cli("train --config " + q(tcfg) + " --seed 22 --out " +
                                 (dir / "rep_c.ckpt").string());
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    REQUIRE(r3.exit_code == 0);
    CHECK(json::parse(r1.out).at("history") == json::parse(r2.out).at("history"));
    CHECK(json::parse(r1.out).at("history") != json::parse(r3.out).at("history"));
    CHECK(slurp(dir / "rep_a.ckpt") == slurp(dir / "rep_b.ckpt"));
}

TEST_CASE("gradcheck passes and writes the battery report") {
    const fs::path out = work_dir() / "gc.json";
    const CliResult r = run_cli("gradcheck --seed 3 --out " + out.string());
    REQUIRE(r.exit_code == 0);
    const json summary = json::parse(r.out);
    CHECK(summary.at("pass") == true);
    const json report = json::parse(slurp(out));
    CHECK(report.at("pass") == true);
    CHECK(report.at("max_rel_error").get<double>() < 1e-5);
    CHECK(report.at("checks").size() >= 30);
}

TEST_CASE("efficiency reports a larger factor for the open-close estimator") {
    const fs::path out = work_dir() / "eff.json";
    const json cfg = {{"n_days", 1000}, {"n_steps", 100}};
    const CliResult r =
        run_cli("efficiency --config " + q(cfg) + " --seed 1 --out " + out.string());
    REQUIRE(r.exit_code == 0);
    const json rep = json::parse(slurp(out));
    const double pk = rep.at("parkinson").get<double>();
    const double gk = rep.at("garman_klass").get<double>();
    CHECK(pk > 1.0);
    CHECK(gk > pk);
}

TEST_CASE("failures exit nonzero with a one-line JSON error on stderr") {
    const fs::path out = work_dir() / "never.json";
    const CliResult r = run_cli("garch-fit --config '{\"prices\":\"/no/such.csv\"}' --out " +
                                out.string());
    CHECK(r.exit_code == 1);
    CHECK(r.out.empty());
    const json err = json::parse(r.err);
    CHECK(err.at("command") == "garch-fit");
    CHECK(err.at("error").get<std::string>().find("/no/such.csv") !=
          std::string::npos);
    CHECK(!fs::exists(out));

    // Config text that is neither JSON nor a readable file.
    const CliResult r2 = run_cli("estimate --config not-a-file --out " + out.string());
    CHECK(r2.exit_code == 1);
    CHECK(json::parse(r2.err).at("error").get<std::string>().find(
              "cannot open config file") != std::string::npos);
}

TEST_CASE("inline JSON and a config file produce identical output") {
    const fs::path prices = work_dir() / "cfg_prices.csv";
    const json sim = {{"sigma_daily", 0.02}, {"n_steps", 25}, {"n_days", 10}};
    REQUIRE(run_cli("simulate-gbm --config " + q(sim) + " --seed 8 --out " +
                    prices.string())
                .exit_code == 0);
    const json cfg = {{"prices", prices.string()}, {"estimator", "garman_klass"}};
    const fs::path cfg_file = work_dir() / "est_cfg.json";
    {
        std::ofstream f(cfg_file);
        f << cfg.dump();
    }
    const fs::path out_a = work_dir() / "est_a.tsv";
    const fs::path out_b = work_dir() / "est_b.tsv";
    REQUIRE(run_cli("estimate --config " + q(cfg) + " --out " + out_a.string())
                .exit_code == 0);
    REQUIRE(run_cli("estimate --config " + cfg_file.string() + " --out " +
                    out_b.string())
                .exit_code == 0);
    CHECK(slurp(out_a) == slurp(out_b));
}
