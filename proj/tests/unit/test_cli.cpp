#include <doctest.h>

#include <fstream>
#include <sstream>

#include "ammi/commands.hpp"
#include "ammi/model.hpp"
#include "temp_dir.hpp"

using namespace ammi;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("usage errors") {
  CHECK(cli({}).code == exit_usage);
  CHECK(cli({"frobnicate"}).code == exit_usage);
  const Run r = cli({"fit-vi", "--output-dir", "/tmp/x"});
  CHECK(r.code == exit_usage);
  CHECK(r.err.rfind("error: kind=usage", 0) == 0);
  CHECK(cli({"fit-vi", "--input", "a.csv", "--output-dir", "o", "--q", "5"}).code == exit_usage);
  CHECK(cli({"--help"}).code == exit_ok);
}

TEST_CASE("error kinds map to exit codes") {
  TempDir dir;
  const Run missing = cli({"fit-freq", "--input", (dir / "nope.csv").string(), "--output-dir", dir.path().string()});
  CHECK(missing.code == exit_io);
  CHECK(missing.err.find("kind=io") != std::string::npos);

  std::ofstream(dir / "dup.csv") << "genotype,environment,yield\nA,X,1\nA,X,2\n";
  CHECK(cli({"fit-freq", "--input", (dir / "dup.csv").string(), "--output-dir", dir.path().string()}).code ==
        exit_validation);
  CHECK(cli({"simulate", "--output-dir", dir.path().string(), "--scale-reading", "huge"}).code ==
        exit_validation);
}

TEST_CASE("simulate, fit, predict and compare") {
  TempDir dir;
  const std::string d = dir.path().string();
  REQUIRE(cli({"simulate", "--output-dir", d + "/sim", "--genotypes", "6", "--environments", "5",
               "--lambda", "20", "--seed", "3", "--missing-fraction", "0.1"})
              .code == exit_ok);
  const Dataset data = load_csv(dir / "sim/data.csv");
  CHECK(data.n_genotypes() == 6);
  CHECK(data.size() == 27);
  CHECK(std::filesystem::exists(dir / "sim/truth.csv"));

  const std::string input = d + "/sim/data.csv";
  REQUIRE(cli({"fit-freq", "--input", input, "--output-dir", d + "/freq", "--q", "1"}).code == exit_ok);
  CHECK(load_theta_csv(dir / "freq/theta.csv", data).n_components() == 1);

  const Run vi = cli({"fit-vi", "--input", input, "--output-dir", d + "/vi", "--q", "1", "--draws", "500",
                      "--hyper", "sigma2_g=50,a=0.5"});
  REQUIRE(vi.code == exit_ok);
  for (const char* f : {"factors.csv", "identified.csv", "elbo_trace.csv", "posterior_summary.csv",
                        "fit_summary.csv", "timing.csv"})
    CHECK(std::filesystem::exists(dir / "vi" / f));
  CHECK(slurp(dir / "vi/elbo_trace.csv").rfind("iteration,elbo,max_change", 0) == 0);

  // Identical reruns give byte-identical deterministic outputs.
  REQUIRE(cli({"fit-vi", "--input", input, "--output-dir", d + "/vi2", "--q", "1", "--draws", "500",
               "--hyper", "sigma2_g=50,a=0.5"})
              .code == exit_ok);
  CHECK(slurp(dir / "vi/posterior_summary.csv") == slurp(dir / "vi2/posterior_summary.csv"));
  CHECK(slurp(dir / "vi/factors.csv") == slurp(dir / "vi2/factors.csv"));

  CHECK(cli({"fit-vi", "--input", input, "--output-dir", d + "/bad", "--hyper", "nonsense=1"}).code ==
        exit_validation);
  CHECK(cli({"fit-vi", "--input", input, "--output-dir", d + "/bad", "--init", "file"}).code != exit_ok);
  REQUIRE(cli({"fit-vi", "--input", input, "--output-dir", d + "/vif", "--q", "1", "--init", "file",
               "--init-file", d + "/freq/theta.csv", "--draws", "200"})
              .code == exit_ok);

  REQUIRE(cli({"fit-mcmc", "--input", input, "--output-dir", d + "/mc", "--q", "1", "--chains", "2",
               "--iters", "300", "--burn", "100", "--write-draws"})
              .code == exit_ok);
  CHECK(std::filesystem::exists(dir / "mc/draws.csv"));

  REQUIRE(cli({"predict", "--input", input, "--output-dir", d + "/pv", "--fit-dir", d + "/vi", "--draws",
               "300"})
              .code == exit_ok);
  CHECK(std::filesystem::exists(dir / "pv/heatmap_q95.csv"));
  std::ifstream pred(dir / "pv/predictions.csv");
  int lines = 0;
  for (std::string l; std::getline(pred, l);) ++lines;
  CHECK(lines == 31);
  REQUIRE(cli({"predict", "--input", input, "--output-dir", d + "/pm", "--fit-dir", d + "/mc"}).code ==
          exit_ok);
  CHECK(cli({"predict", "--input", input, "--output-dir", d + "/px", "--fit-dir", d + "/freq"}).code ==
        exit_io);

  REQUIRE(cli({"compare", "--vi-dir", d + "/vi", "--mcmc-dir", d + "/mc", "--output-dir", d + "/cmp"})
              .code == exit_ok);
  CHECK(slurp(dir / "cmp/comparison.csv").find("sigma2") != std::string::npos);

  REQUIRE(cli({"fit-vi", "--input", input, "--output-dir", d + "/vi0", "--q", "0", "--draws", "100"}).code ==
          exit_ok);
  CHECK(cli({"compare", "--vi-dir", d + "/vi0", "--mcmc-dir", d + "/mc", "--output-dir", d + "/cmp2"}).code ==
        exit_dimension);
}

TEST_CASE("config file") {
  TempDir dir;
  const std::string d = dir.path().string();
  std::ofstream(dir / "run.cfg") << "# scenario\ngenotypes = 4\nenvironments = 3\nseed = 8\n";
  REQUIRE(cli({"simulate", "--config", d + "/run.cfg", "--output-dir", d + "/a"}).code == exit_ok);
  CHECK(load_csv(dir / "a/data.csv").size() == 12);
  // Explicit flags win over the file.
  REQUIRE(cli({"simulate", "--config", d + "/run.cfg", "--output-dir", d + "/b", "--genotypes", "5"}).code ==
          exit_ok);
  CHECK(load_csv(dir / "b/data.csv").n_genotypes() == 5);
  CHECK(cli({"simulate", "--config", d + "/none.cfg", "--output-dir", d + "/c"}).code == exit_io);
}

TEST_CASE("studies") {
  TempDir dir;
  const std::string d = dir.path().string();
  REQUIRE(cli({"init-study", "--output-dir", d + "/is", "--genotypes", "6", "--environments", "5", "--seeds",
               "1", "--modes", "freq,random", "--max-iter", "30"})
              .code == exit_ok);
  CHECK(slurp(dir / "is/init_final.csv").find("random") != std::string::npos);
  CHECK(cli({"compare-init", "--output-dir", d + "/is2", "--genotypes", "6", "--environments", "5", "--seeds",
             "1", "--modes", "freq", "--max-iter", "5"})
            .code == exit_ok);
  CHECK(cli({"benchmark", "--output-dir", d + "/bm", "--group", "huge"}).code == exit_usage);
}
