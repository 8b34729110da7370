// Drives the rmac binary end to end through a shell.

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "npy.hpp"
#include "rmac/actmap_codec.hpp"
#include "rmac/descriptor.hpp"
#include "rmac/retrieval.hpp"
#include "rmac/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int status = -1;
  std::string out;
};

// stdout is captured; stderr goes to a file so failures stay readable
RunResult run(const std::string& args, const fs::path& cwd) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" RMAC_CLI_PATH "' " + args + " 2>stderr.txt";
  RunResult r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int st = pclose(p);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Workdir {
  fs::path dir;
  explicit Workdir(const std::string& name) : dir(fs::temp_directory_path() / ("rmac_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workdir() { fs::remove_all(dir); }
};

const fs::path golden = fs::path(RMAC_TEST_DATA_DIR) / "golden_4x3x2.actmap";

}  // namespace

TEST_CASE("import of a valid actmap copies it byte for byte") {
  Workdir w("import");
  const auto r = run("actmap import '" + golden.string() + "' --out-dir store", w.dir);
  REQUIRE(r.status == 0);
  CHECK(slurp(w.dir / "store" / "gold.actmap") == slurp(golden));
}

TEST_CASE("validate rejects a corrupted magic with a non-zero exit") {
  Workdir w("corrupt");
  auto bytes = rmac::read_file_bytes(golden);
  bytes[1] = 'X';
  rmac::write_file_bytes(w.dir / "bad.actmap", bytes);
  CHECK(run("actmap validate bad.actmap", w.dir).status != 0);
  CHECK(slurp(w.dir / "stderr.txt").find("magic") != std::string::npos);
  CHECK(run("actmap validate '" + golden.string() + "'", w.dir).status == 0);
}

TEST_CASE("dense npy import quantizes every cell") {
  Workdir w("npy");
  rmac::DenseTensor t(4, 3, 2, rmac::ImageMeta{"", 64, 48});
  for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] = (i % 5 == 0) ? 0.0 : 13.0 * double(i);
  rmac::tools::write_npy_tensor(w.dir / "dense.npy", t);
  REQUIRE(run("actmap import dense.npy --out-dir store --id dense --image-size 64x48", w.dir).status == 0);
  const auto back = rmac::read_actmap(w.dir / "store" / "dense.actmap");
  const auto want = rmac::quantize(t);
  REQUIRE(back.width() == 4);
  REQUIRE(back.height() == 3);
  REQUIRE(back.channels() == 2);
  CHECK(back.meta().image_id == "dense");
  CHECK(back.meta().image_width == 64u);
  for (int c = 0; c < 2; ++c)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 4; ++x) CHECK(back.level(c, x, y) == want.level(c, x, y));
}

TEST_CASE("index build, query and evaluation on a small corpus") {
  Workdir w("pipeline");
  REQUIRE(run("synth --out-dir demo --database 12 --planted 4 --queries 2 --training 6", w.dir).status == 0);

  const std::string build = "--activation-dir demo/db index build --learn-pca demo/train";
  REQUIRE(run("--index a.dsc " + build, w.dir).status == 0);
  REQUIRE(run("--index b.dsc " + build, w.dir).status == 0);
  REQUIRE(run("--index m.dsc --kind mac " + build, w.dir).status == 0);

  SUBCASE("rebuilding gives identical bytes") {
    CHECK(slurp(w.dir / "a.dsc") == slurp(w.dir / "b.dsc"));
    CHECK(slurp(w.dir / "a.dsc.pca") == slurp(w.dir / "b.dsc.pca"));
  }

  SUBCASE("MAC and R-MAC indexes differ") {
    CHECK(slurp(w.dir / "a.dsc") != slurp(w.dir / "m.dsc"));
    CHECK(slurp(w.dir / "m.dsc.meta").find("kind = mac") != std::string::npos);
  }

  SUBCASE("filter-only query matches the library ranking") {
    const auto r = run("--index a.dsc query --query demo/queries/query_000.actmap --stages filter", w.dir);
    REQUIRE(r.status == 0);
    const rmac::RegionGridParams grid;
    rmac::Index index(rmac::read_descriptors(w.dir / "a.dsc"), rmac::DescriptorKind::rmac,
                      rmac::read_pca(w.dir / "a.dsc.pca"), grid, rmac::directory_loader(w.dir / "demo" / "db"));
    const auto q = rmac::read_actmap(w.dir / "demo" / "queries" / "query_000.actmap");
    std::ostringstream want;
    rmac::write_ranked_list(want, rmac::filter_rank(index, rmac::describe(q, index.kind(), grid, index.pca())));
    CHECK(r.out == want.str());
  }

  SUBCASE("eval map reports every ground-truth query and a mean") {
    const auto r = run("--index a.dsc --ground-truth demo/gt eval map", w.dir);
    REQUIRE(r.status == 0);
    CHECK(r.out.rfind("query,ap\n", 0) == 0);
    CHECK(r.out.find("\nmAP,") != std::string::npos);
  }

  SUBCASE("an empty ground-truth directory is an error, not a zero mAP") {
    fs::create_directories(w.dir / "empty_gt");
    const auto r = run("--index a.dsc --ground-truth empty_gt eval map", w.dir);
    CHECK(r.status != 0);
    CHECK(r.out.find("mAP") == std::string::npos);
  }

  SUBCASE("config file values apply and flags override them") {
    {
      std::ofstream cfg(w.dir / "run.cfg");
      cfg << "index = a.dsc\nshortlist = 3\n";
    }
    const auto from_cfg = run("--config run.cfg query --query demo/queries/query_000.actmap --stages filter,aml", w.dir);
    const auto flagged =
        run("--config run.cfg --shortlist 5 query --query demo/queries/query_000.actmap --stages filter,aml", w.dir);
    REQUIRE(from_cfg.status == 0);
    REQUIRE(flagged.status == 0);
    CHECK(slurp(w.dir / "stderr.txt").find("for 5 images") != std::string::npos);
    CHECK(from_cfg.out != flagged.out);
  }
}

TEST_CASE("regions dump lists the grid as CSV") {
  Workdir w("regions");
  const auto r = run("--scales 2 regions dump --w 30 --h 22", w.dir);
  REQUIRE(r.status == 0);
  CHECK(r.out.rfind("scale,index,x0,y0,x1,y1,side\n", 0) == 0);
  CHECK(r.out.find("\n2,") != std::string::npos);
  CHECK(r.out.find("\n3,") == std::string::npos);
}
