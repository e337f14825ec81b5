// End-to-end tests for the command-line front end: exit codes, config echo,
// reproducibility of outputs, and the divergence fallback path.

#include <catch2/catch_amalgamated.hpp>

#include <usindy/analyze.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

using namespace usindy;

const std::string& work_dir() {
  static const std::string dir = [] {
    const std::filesystem::path p =
        std::filesystem::temp_directory_path() / "usindy_cli_tests";
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p.string();
  }();
  return dir;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

// Runs the binary with the given arguments; returns the exit code and
// optionally captures combined stdout+stderr.
int run_cli(const std::string& args, std::string* output = nullptr) {
  static int counter = 0;
  const std::string cap = work_dir() + "/cmd_" + std::to_string(counter++) + ".txt";
  const std::string cmd =
      std::string(USINDY_CLI_PATH) + " " + args + " > " + cap + " 2>&1";
  const int rc = std::system(cmd.c_str());
  if (output) *output = read_file(cap);
  REQUIRE(rc != -1);
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// Short advection dataset shared across cases; simulated once via the CLI.
const std::string& adv_dataset() {
  static const std::string path = [] {
    const std::string p = work_dir() + "/adv.bin";
    REQUIRE(run_cli("simulate --system advection --t-end 0.2 --out " + p +
                    " --meta " + p + ".meta.json") == 0);
    return p;
  }();
  return path;
}

// Full cubic oscillator dataset shared across cases.
const std::string& cubic_dataset() {
  static const std::string path = [] {
    const std::string p = work_dir() + "/cubic.bin";
    REQUIRE(run_cli("simulate --system cubic_oscillator --out " + p + " --meta " +
                    p + ".meta.json") == 0);
    return p;
  }();
  return path;
}

TEST_CASE("bad invocations exit with the validation code", "[cli]") {
  CHECK(run_cli("") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("simulate --system advection --no-such-flag 1") == 2);
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("simulate --help") == 0);
}

TEST_CASE("simulate writes a reproducible dataset and echoes its config", "[cli]") {
  std::string out1;
  REQUIRE(run_cli("simulate --system advection --t-end 0.2 --out " + work_dir() +
                      "/sim_a.bin --meta " + work_dir() + "/sim_a.json",
                  &out1) == 0);
  CHECK(out1.find("fingerprint fnv1a:") != std::string::npos);

  const json meta = json::parse(read_file(work_dir() + "/sim_a.json"));
  CHECK(meta.at("config").at("system") == "advection");
  CHECK(meta.at("config").at("t_end").get<double>() == 0.2);
  CHECK(meta.at("config").at("dt").get<double>() == 2e-4);  // default materialized
  CHECK(meta.at("config").at("seed").get<std::uint64_t>() == 0);
  CHECK(meta.at("snapshots").get<long>() == 1001);

  const Dataset ds = load_dataset(work_dir() + "/sim_a.bin");
  CHECK(ds.snapshots() == 1001);
  CHECK(ds.grid.points() == 128);
  CHECK(fingerprint(ds) == meta.at("fingerprint").get<std::string>());

  std::string out2;
  REQUIRE(run_cli("simulate --system advection --t-end 0.2 --out " + work_dir() +
                      "/sim_b.bin --meta " + work_dir() + "/sim_b.json",
                  &out2) == 0);
  CHECK(out1.substr(0, out1.find('\n')) == out2.substr(0, out2.find('\n')));
  CHECK(read_file(work_dir() + "/sim_a.bin") == read_file(work_dir() + "/sim_b.bin"));
}

TEST_CASE("invalid simulate parameters are rejected", "[cli]") {
  CHECK(run_cli("simulate --system advection --dt 0 --out " + work_dir() + "/x.bin") == 2);
  CHECK(run_cli("simulate --system advection --sigma -0.1 --out " + work_dir() + "/x.bin") == 2);
  CHECK(run_cli("simulate --system no_such_system --out " + work_dir() + "/x.bin") == 2);
  CHECK(run_cli("simulate --system advection --x0 1 --out " + work_dir() + "/x.bin") == 2);
}

TEST_CASE("echoed config reproduces the run byte for byte", "[cli]") {
  json cfg = json::parse(read_file(adv_dataset() + ".meta.json")).at("config");
  cfg["out"] = work_dir() + "/echo.bin";
  cfg["meta"] = work_dir() + "/echo.meta.json";
  write_file(work_dir() + "/echo_config.json", cfg.dump());
  REQUIRE(run_cli("simulate --config " + work_dir() + "/echo_config.json") == 0);
  CHECK(read_file(work_dir() + "/echo.bin") == read_file(adv_dataset()));

  const json a = json::parse(read_file(adv_dataset() + ".meta.json"));
  const json b = json::parse(read_file(work_dir() + "/echo.meta.json"));
  CHECK(a.at("fingerprint") == b.at("fingerprint"));
}

TEST_CASE("unknown config keys are rejected", "[cli]") {
  write_file(work_dir() + "/bad_key.json", R"({"system":"advection","bogus":1})");
  std::string out;
  CHECK(run_cli("simulate --config " + work_dir() + "/bad_key.json --out " +
                    work_dir() + "/x.bin",
                &out) == 2);
  CHECK(out.find("bogus") != std::string::npos);
}

TEST_CASE("discover prints the recovered equation and the model round-trips", "[cli]") {
  std::string out;
  const std::string model_path = work_dir() + "/adv_model.json";
  REQUIRE(run_cli("discover --system advection --dataset " + adv_dataset() +
                      " --method euler --K 25 --h-stride 40 --out " + model_path,
                  &out) == 0);
  CHECK(out.find("du/dt = -0.400 u_x") != std::string::npos);
  CHECK(out.find("l1_error") != std::string::npos);

  const DiscoveredModel model = load_model(model_path);
  CHECK(model.library.terms.size() == 7);
  CHECK(model.config.K == 25);
  CHECK(model.config.method == Method::Euler);

  long ux_row = -1;
  for (long i = 0; i < model.library.size(); ++i)
    if (model.library.terms[i].label == "u_x") ux_row = i;
  REQUIRE(ux_row >= 0);
  CHECK(model.coefficients.values(ux_row, 0) == Catch::Approx(-0.4).margin(5e-3));
  CHECK(model.coefficients.active_count() == 1);

  // The model file carries the CLI-level effective config alongside the
  // schema load_model understands.
  const json jm = json::parse(read_file(model_path));
  CHECK(jm.at("cli_config").at("h_stride").get<int>() == 40);
  CHECK(jm.at("cli_config").at("discovery").at("K").get<int>() == 25);
  CHECK(jm.at("cli_config").at("fell_back_to_sgd").get<bool>() == false);

  // The subsampled dataset is what the model fingerprints.
  const Dataset sub = subsample(load_dataset(adv_dataset()), 40);
  CHECK(model.dataset_fingerprint == fingerprint(sub));
}

TEST_CASE("flags override config file values", "[cli]") {
  json cfg;
  cfg["system"] = "advection";
  cfg["dataset"] = adv_dataset();
  cfg["K"] = 1;
  cfg["h_stride"] = 40;
  write_file(work_dir() + "/disc_config.json", cfg.dump());
  const std::string model_path = work_dir() + "/prec_model.json";
  REQUIRE(run_cli("discover --config " + work_dir() +
                      "/disc_config.json --K 25 --out " + model_path) == 0);
  CHECK(load_model(model_path).config.K == 25);
}

TEST_CASE("repeated discover runs produce identical model files", "[cli]") {
  const std::string args = "discover --system advection --dataset " + adv_dataset() +
                           " --method euler --K 1 --h-stride 40 --out " +
                           work_dir() + "/rep.json";
  REQUIRE(run_cli(args) == 0);
  const std::string first = read_file(work_dir() + "/rep.json");
  REQUIRE(run_cli(args) == 0);
  CHECK(first == read_file(work_dir() + "/rep.json"));
}

TEST_CASE("missing or corrupt discover inputs are validation errors", "[cli]") {
  write_file(work_dir() + "/corrupt.bin", "not a dataset");
  CHECK(run_cli("discover --system advection --dataset " + work_dir() +
                "/corrupt.bin --out " + work_dir() + "/x.json") == 2);
  CHECK(run_cli("discover --system advection --out " + work_dir() + "/x.json") == 2);
  CHECK(run_cli("discover --dataset " + adv_dataset() + " --out " + work_dir() +
                "/x.json") == 2);
  CHECK(run_cli("discover --system advection --dataset " + adv_dataset() +
                " --solver nonsense --out " + work_dir() + "/x.json") == 2);
}

TEST_CASE("simulation divergence exits with its own code", "[cli]") {
  std::string out;
  CHECK(run_cli("simulate --system cubic_oscillator --dt 10 --solver-dt 10 "
                "--t-end 100 --out " +
                    work_dir() + "/div.bin",
                &out) == 3);
  CHECK(out.find("non-finite") != std::string::npos);
}

TEST_CASE("discovery divergence exits with its own code and the fallback rescues it",
          "[cli]") {
  const std::string args = "discover --system cubic_oscillator --dataset " +
                           cubic_dataset() +
                           " --method euler --K 50 --h-stride 3000 --out ";
  std::string out;
  CHECK(run_cli(args + work_dir() + "/cdiv.json", &out) == 4);
  CHECK(out.find("non-finite") != std::string::npos);

  REQUIRE(run_cli(args + work_dir() + "/cfall.json" + " --fallback-sgd", &out) == 0);
  const DiscoveredModel model = load_model(work_dir() + "/cfall.json");
  CHECK(model.config.solver == Solver::SGD);
  const json jm = json::parse(read_file(work_dir() + "/cfall.json"));
  CHECK(jm.at("cli_config").at("fell_back_to_sgd").get<bool>() == true);
}

TEST_CASE("sweep writes echoed outputs and tolerates diverged cells", "[cli]") {
  const std::string base = "sweep --system cubic_oscillator --h 0.1,0.6 --K 1,50 ";
  REQUIRE(run_cli(base + "--csv " + work_dir() + "/sw_a.csv --json " + work_dir() +
                  "/sw_a.json") == 0);
  const std::string csv = read_file(work_dir() + "/sw_a.csv");
  CHECK(csv.rfind("h,K,sigma,method,solver,l1_error,recovered_support_correct,"
                  "extra_terms,runtime_seconds,status",
                  0) == 0);
  CHECK(csv.find("diverged") != std::string::npos);

  const json bundle = json::parse(read_file(work_dir() + "/sw_a.json"));
  CHECK(bundle.at("config").at("h_list") == json::array({0.1, 0.6}));
  CHECK(bundle.at("config").at("K_list") == json::array({1, 50}));
  CHECK(bundle.at("config").at("methods") == json::array({"euler"}));
  REQUIRE(bundle.at("cells").size() == 4);
  int diverged = 0, ok = 0;
  for (const auto& cj : bundle.at("cells")) {
    const auto cell = cj.get<SweepCell>();
    (cell.status == CellStatus::Diverged ? diverged : ok)++;
    CHECK(cell.runtime_seconds == 0.0);  // runtimes gated behind --record-runtimes
  }
  CHECK(ok >= 2);
  CHECK(diverged >= 1);

  // Byte-identical re-run, and --jobs changes scheduling but not results.
  REQUIRE(run_cli(base + "--csv " + work_dir() + "/sw_b.csv --json " + work_dir() +
                  "/sw_b.json") == 0);
  CHECK(read_file(work_dir() + "/sw_a.csv") == read_file(work_dir() + "/sw_b.csv"));
  REQUIRE(run_cli(base + "--jobs 2 --csv " + work_dir() + "/sw_c.csv --json " +
                  work_dir() + "/sw_c.json") == 0);
  CHECK(read_file(work_dir() + "/sw_a.csv") == read_file(work_dir() + "/sw_c.csv"));

  CHECK(run_cli("sweep --system cubic_oscillator --K 1 --csv " + work_dir() +
                "/x.csv --json " + work_dir() + "/x.json") == 2);  // empty h list
}

TEST_CASE("stability classifies the pinned boundary case", "[cli]") {
  REQUIRE(run_cli("stability --system cubic-oscillator --method euler --h 0.6 "
                  "--K 1,50 --csv " +
                  work_dir() + "/st.csv --json " + work_dir() + "/st.json") == 0);
  const std::string csv = read_file(work_dir() + "/st.csv");
  CHECK(csv.rfind("method,h,K,j,z_re,z_im,amplification,stable", 0) == 0);
  CHECK(csv.find("euler,0.6,1,0,") != std::string::npos);
  CHECK(csv.find("false") != std::string::npos);
  CHECK(csv.find("true") != std::string::npos);

  const json doc = json::parse(read_file(work_dir() + "/st.json"));
  REQUIRE(doc.at("eigenvalues").size() == 2);
  bool saw_conjugate = false;
  for (const auto& e : doc.at("eigenvalues")) {
    CHECK(e.at("re").get<double>() == Catch::Approx(-0.2159).margin(1e-3));
    if (e.at("im").get<double>() > 0) saw_conjugate = true;
    CHECK(std::abs(e.at("im").get<double>()) == Catch::Approx(3.2058).margin(1e-3));
  }
  CHECK(saw_conjugate);

  CHECK(run_cli("stability --method euler --h 0.6 --K 1 --csv " + work_dir() +
                "/x.csv") == 2);  // missing system
  CHECK(run_cli("stability --system ks --h 0.6 --K 1 --csv " + work_dir() +
                "/x.csv") == 2);  // not a two-variable system
}

TEST_CASE("truncation probe fits the expected slopes", "[cli]") {
  std::string out;
  REQUIRE(run_cli("probe-truncation --method euler --h 0.5 --K 1,2,4,8,16,32,64 "
                  "--csv " +
                      work_dir() + "/pe.csv --json " + work_dir() + "/pe.json",
                  &out) == 0);
  CHECK(out.find("euler slope") != std::string::npos);
  const std::string csv = read_file(work_dir() + "/pe.csv");
  CHECK(csv.rfind("method,h,K,one_step_error,slope,slope_wrt", 0) == 0);
  const json pe = json::parse(read_file(work_dir() + "/pe.json"));
  REQUIRE(pe.at("rows").size() == 7);
  CHECK(pe.at("rows")[0].at("slope").get<double>() ==
        Catch::Approx(-1.0).margin(0.15));
  CHECK(pe.at("rows")[0].at("slope_wrt") == "K");

  REQUIRE(run_cli("probe-truncation --method rk4 --h 0.4 --K 1,2,4,8 --csv " +
                  work_dir() + "/pr.csv --json " + work_dir() + "/pr.json") == 0);
  const json pr = json::parse(read_file(work_dir() + "/pr.json"));
  CHECK(pr.at("rows")[0].at("slope").get<double>() == Catch::Approx(4.0).margin(0.3));
  CHECK(pr.at("rows")[0].at("slope_wrt") == "h_over_K");

  CHECK(run_cli("probe-truncation --method rk4 --h 0.4 --K 1 --csv " + work_dir() +
                "/x.csv") == 2);  // cannot fit a slope to one point
}

}  // namespace
