#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <functional>

#include "app.hpp"
#include "doctest.h"

namespace fs = std::filesystem;
using namespace vproof::app;

namespace {

const char* kSmall = R"(
[run]
seed = 5
corpus_size = 160
workers = %W%
output_dir = unused
eval_goals = 40

[train]
updates = 15

[correct]
k = 6
)";

RunConfig small(int workers) {
  std::string t = kSmall;
  t.replace(t.find("%W%"), 3, std::to_string(workers));
  return parse_config(t);
}

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("vproof_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

int code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const AppError& e) {
    return e.code();
  }
  return 0;
}

}  // namespace

TEST_CASE("unknown config keys are rejected by name") {
  try {
    parse_config("[run]\nseed = 1\nbogus = 2\n");
    FAIL("accepted an unknown key");
  } catch (const AppError& e) {
    CHECK(e.code() == 1);
    CHECK(std::string(e.what()).find("run.bogus") != std::string::npos);
  }
  CHECK(code_of([] { parse_config("[train]\nupdates = many\n"); }) == 1);
  CHECK(code_of([] { parse_config("seed = 1\n"); }) == 1);
  CHECK(code_of([] { parse_config("[run]\nseed = 1\nseed = 2\n"); }) == 1);
  CHECK(code_of([] { parse_config("[split]\ntrain = 0.9\n"); }) == 1);
  CHECK(code_of([] { load_config("/nonexistent/desk.cfg"); }) == 2);
}

TEST_CASE("canonical text round-trips and ignores workers") {
  RunConfig a = small(1), b = small(4);
  CHECK(canonical_config(a) == canonical_config(b));
  CHECK(canonical_config(a).find("train.updates = 15\n") != std::string::npos);
  CHECK(canonical_config(a).find("workers") == std::string::npos);
}

TEST_CASE("the run directory can come from the environment") {
  RunConfig c = small(1);
  ::unsetenv("VPROOF_RUN_DIR");
  CHECK(resolve_run_dir(c) == fs::path("unused"));
  ::setenv("VPROOF_RUN_DIR", "/tmp/elsewhere", 1);
  CHECK(resolve_run_dir(c) == fs::path("/tmp/elsewhere"));
  ::unsetenv("VPROOF_RUN_DIR");
}

TEST_CASE("bench is byte-identical across worker counts and re-runs") {
  fs::path d1 = fresh_dir("w1"), d2 = fresh_dir("w2");
  cmd_bench(small(1), Options{d1, false, nullptr});
  cmd_bench(small(2), Options{d2, false, nullptr});
  for (const char* f : {"corpus/corpus.jsonl", "corpus/split.jsonl", "reports/table.txt", "reports/table.jsonl",
                        "reports/stats.txt", "reports/correct.jsonl", "checkpoints/policy.ckpt", "manifest"}) {
    CAPTURE(f);
    CHECK(read_file(d1 / f) == read_file(d2 / f));
  }
  const std::string table = read_file(d1 / "reports/table.txt");
  CHECK(table.find("flawed-test+correction") != std::string::npos);

  // resuming is a no-op; a different config is refused unless overwriting
  const auto stamp = fs::last_write_time(d1 / "reports/table.txt");
  cmd_bench(small(1), Options{d1, false, nullptr});
  CHECK(fs::last_write_time(d1 / "reports/table.txt") == stamp);
  RunConfig other = small(1);
  other.seed = 6;
  other.finalize();
  CHECK(code_of([&] { cmd_gen(other, Options{d1, false, nullptr}); }) == 1);
  CHECK(read_file(d1 / "corpus/corpus.jsonl") == read_file(d2 / "corpus/corpus.jsonl"));
  cmd_gen(other, Options{d1, true, nullptr});
  CHECK(read_file(d1 / "corpus/corpus.jsonl") != read_file(d2 / "corpus/corpus.jsonl"));
  // downstream steps see the changed input and refuse
  CHECK(code_of([&] { cmd_split(other, Options{d1, false, nullptr}); }) == 1);
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST_CASE("missing inputs are I/O errors and malformed corpora validation errors") {
  fs::path d = fresh_dir("io");
  CHECK(code_of([&] { cmd_split(small(1), Options{d, false, nullptr}); }) == 2);
  write_file(d / "bad.jsonl", "{not json}\n");
  CHECK(code_of([&] { cmd_verify(small(1), Options{d, false, nullptr}, d / "bad.jsonl"); }) == 1);
  CHECK_FALSE(fs::exists(d / "reports/verify.jsonl"));
  fs::remove_all(d);
}
