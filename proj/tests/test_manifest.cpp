#include <doctest.h>

#include "support.hpp"
#include "xanchor/error.hpp"
#include "xanchor/manifest.hpp"

using namespace xanchor;

TEST_SUITE("manifest") {

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq") ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
  testing::TempDir tmp("manifest");
  // longer than one read buffer
  std::string big(200000, 'a');
  testing::spit(tmp / "big", big);
  CHECK(sha256_file(tmp / "big") == sha256_hex(big));
  CHECK_THROWS_AS(sha256_file(tmp / "missing"), FormatError);
}

TEST_CASE("manifest round trip") {
  testing::TempDir tmp("manifest");
  testing::spit(tmp / "in.txt", "abc");
  testing::spit(tmp / "out.txt", "");
  RunManifest m;
  m.subcommand = "eval";
  m.flags = {{"k", 10}, {"retrieval", "nn"}};
  m.add_input(tmp / "in.txt");
  m.add_output(tmp / "out.txt");
  m.seed = 7;
  m.tool_version = "0.1.0";
  m.wall_time_seconds = 1.5;
  m.exit_code = 3;
  CHECK(m.inputs.begin()->second ==
        "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  const auto path = manifest_path_for(tmp / "out.txt");
  CHECK(path.filename() == "out.txt.manifest.json");
  m.write(path);
  auto back = RunManifest::read(path);
  CHECK(back.to_json() == m.to_json());
  for (const char* key : {"subcommand", "flags", "inputs", "outputs", "seed", "tool_version", "wall_time_seconds",
                          "exit_code"}) {
    CHECK(m.to_json().contains(key));
  }
  testing::spit(tmp / "bad.json", "{\"flags\": {}}");
  CHECK_THROWS_AS(RunManifest::read(tmp / "bad.json"), ConfigError);
  testing::spit(tmp / "broken.json", "{");
  CHECK_THROWS_AS(RunManifest::read(tmp / "broken.json"), ConfigError);
}

TEST_CASE("directory inputs list every file") {
  testing::TempDir tmp("manifest");
  std::filesystem::create_directories(tmp / "d" / "sub");
  testing::spit(tmp / "d" / "a", "1");
  testing::spit(tmp / "d" / "sub" / "b", "2");
  RunManifest m;
  m.add_input(tmp / "d");
  CHECK(m.inputs.size() == 2);
  CHECK(m.inputs.count((tmp / "d" / "sub" / "b").generic_string()) == 1);
}

}  // TEST_SUITE
