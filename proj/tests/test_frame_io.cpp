#include "advfilter/frame_io.hpp"

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"

#include "advfilter/errors.hpp"

using namespace advfilter;

namespace {

#include "y4m_expected.inc"

// Mirrors the formula the expected values were generated from.
std::vector<unsigned char> plane_bytes(int frame, int plane, int n) {
  std::vector<unsigned char> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] =
        static_cast<unsigned char>((frame * 97 + plane * 31 + i * 17 + 3) % 256);
  }
  return out;
}

std::vector<unsigned char> build_y4m_fixture() {
  std::string header = "YUV4MPEG2 W4 H4 F10:1 Ip A1:1 C420\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  for (int f = 0; f < 2; ++f) {
    const std::string marker = "FRAME\n";
    bytes.insert(bytes.end(), marker.begin(), marker.end());
    for (int plane = 0; plane < 3; ++plane) {
      int n = plane == 0 ? 16 : 4;
      auto p = plane_bytes(f, plane, n);
      bytes.insert(bytes.end(), p.begin(), p.end());
    }
  }
  return bytes;
}

std::vector<unsigned char> y4m_bytes(const std::string& header,
                                     const std::vector<unsigned char>& payload) {
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.insert(bytes.end(), payload.begin(), payload.end());
  return bytes;
}

}  // namespace

TEST_CASE("decodes the reference fixture exactly") {
  auto [manifest, frames] = parse_y4m(build_y4m_fixture(), "fixture.y4m");
  REQUIRE(frames.size() == 2);
  CHECK(manifest.width == 4);
  CHECK(manifest.height == 4);
  CHECK(manifest.fps_num == 10);
  CHECK(manifest.fps_den == 1);
  CHECK(manifest.source == "fixture.y4m");
  REQUIRE(manifest.entries.size() == 2);
  CHECK(manifest.entries[0].role == Role::clean);
  CHECK(manifest.entries[1].path == "frame_000001.ppm");

  for (std::size_t f = 0; f < 2; ++f) {
    REQUIRE(frames[f].pixels.size() == 48);
    CHECK(frames[f].index == f);
    for (std::size_t i = 0; i < 48; ++i) {
      CAPTURE(f);
      CAPTURE(i);
      CHECK(std::abs(frames[f].pixels[i] - kY4mExpected[f * 48 + i]) <= 1e-12);
    }
  }
}

TEST_CASE("neutral chroma reproduces the luma exactly") {
  // Y=v, Cb=Cr=128 must decode to gray v/255 on every channel.
  std::vector<unsigned char> payload = {'F', 'R', 'A', 'M', 'E', '\n',
                                        200, 0, 10, 255, 128, 128};
  auto [manifest, frames] = parse_y4m(y4m_bytes("YUV4MPEG2 W2 H2 F25:1 C420\n", payload));
  REQUIRE(frames.size() == 1);
  const double expected[4] = {200 / 255.0, 0.0, 10 / 255.0, 1.0};
  for (int p = 0; p < 4; ++p) {
    for (int c = 0; c < 3; ++c) {
      CHECK(frames[0].pixels[static_cast<std::size_t>(p) * 3 + c] ==
            doctest::Approx(expected[p]).epsilon(1e-14));
    }
  }
}

TEST_CASE("zero chroma bytes clamp red and blue but leave green positive") {
  // All-zero planes are NOT an all-black image under full-range BT.601:
  // Cb=Cr=0 swings green up while red/blue clamp at 0.
  std::vector<unsigned char> payload(6 + 3, 0);
  std::string marker = "FRAME\n";
  std::copy(marker.begin(), marker.end(), payload.begin());
  auto [manifest, frames] = parse_y4m(y4m_bytes("YUV4MPEG2 W1 H1 F1:1 C444\n", payload));
  REQUIRE(frames.size() == 1);
  CHECK(frames[0].pixels[0] == 0.0);
  CHECK(frames[0].pixels[2] == 0.0);
  CHECK(frames[0].pixels[1] ==
        doctest::Approx((0.344136 + 0.714136) * 128.0 / 255.0).epsilon(1e-14));
}

TEST_CASE("colorspace tags") {
  std::vector<unsigned char> c420_payload = {'F', 'R', 'A', 'M', 'E', '\n',
                                             10, 20, 30, 40, 128, 128};
  SUBCASE("420 variants all use the same layout") {
    for (const char* cs : {"C420", "C420jpeg", "C420mpeg2"}) {
      auto bytes = y4m_bytes(std::string("YUV4MPEG2 W2 H2 F1:1 ") + cs + "\n", c420_payload);
      auto [manifest, frames] = parse_y4m(bytes);
      CHECK(frames.size() == 1);
    }
  }
  SUBCASE("missing C tag defaults to 4:2:0") {
    auto [manifest, frames] = parse_y4m(y4m_bytes("YUV4MPEG2 W2 H2 F1:1\n", c420_payload));
    CHECK(frames.size() == 1);
  }
  SUBCASE("4:4:4 carries full chroma planes") {
    std::vector<unsigned char> payload = {'F', 'R', 'A', 'M', 'E', '\n'};
    payload.resize(6 + 12, 128);
    payload[6] = 99;  // Y of the only... first pixel
    auto [manifest, frames] = parse_y4m(y4m_bytes("YUV4MPEG2 W2 H2 F1:1 C444\n", payload));
    REQUIRE(frames.size() == 1);
    CHECK(frames[0].pixels[0] == doctest::Approx(99 / 255.0).epsilon(1e-14));
  }
  SUBCASE("unsupported colorspace is a typed error") {
    CHECK_THROWS_AS(parse_y4m(y4m_bytes("YUV4MPEG2 W2 H2 F1:1 C422\n", {})),
                    UnsupportedColorspace);
    CHECK_THROWS_AS(parse_y4m(y4m_bytes("YUV4MPEG2 W2 H2 F1:1 Cmono\n", {})),
                    UnsupportedColorspace);
  }
}

TEST_CASE("odd dimensions round chroma planes up") {
  // 3x3 4:2:0 -> 2x2 chroma planes; 9 + 4 + 4 bytes per frame.
  std::vector<unsigned char> payload = {'F', 'R', 'A', 'M', 'E', '\n'};
  payload.resize(6 + 9 + 8, 128);
  auto [manifest, frames] = parse_y4m(y4m_bytes("YUV4MPEG2 W3 H3 F1:1\n", payload));
  REQUIRE(frames.size() == 1);
  CHECK(frames[0].width == 3);
  CHECK(frames[0].height == 3);
}

TEST_CASE("malformed headers are typed errors") {
  CHECK_THROWS_AS(parse_y4m(y4m_bytes("JUNK W4 H4 F10:1\n", {})), MalformedHeader);
  CHECK_THROWS_AS(parse_y4m(y4m_bytes("YUV4MPEG2 H4 F10:1\n", {})), MalformedHeader);
  CHECK_THROWS_AS(parse_y4m(y4m_bytes("YUV4MPEG2 W4 F10:1\n", {})), MalformedHeader);
  CHECK_THROWS_AS(parse_y4m(y4m_bytes("YUV4MPEG2 W4 H4\n", {})), MalformedHeader);
  CHECK_THROWS_AS(parse_y4m(y4m_bytes("YUV4MPEG2 W4 H4 F10\n", {})), MalformedHeader);
  CHECK_THROWS_AS(parse_y4m(y4m_bytes("YUV4MPEG2 W0 H4 F10:1\n", {})), MalformedHeader);
  CHECK_THROWS_AS(parse_y4m(y4m_bytes("YUV4MPEG2 W4 H4 F0:1\n", {})), MalformedHeader);
  CHECK_THROWS_AS(parse_y4m(y4m_bytes("YUV4MPEG2 W4 H4 F10:1 Qx\n", {})), MalformedHeader);
  CHECK_THROWS_AS(parse_y4m(std::vector<unsigned char>{}), MalformedHeader);
}

TEST_CASE("frame marker and payload truncation") {
  auto fixture = build_y4m_fixture();
  SUBCASE("truncated payload") {
    std::vector<unsigned char> cut(fixture.begin(), fixture.begin() + 50);
    CHECK_THROWS_AS(parse_y4m(cut), TruncatedFrame);
  }
  SUBCASE("bad frame marker") {
    auto broken = fixture;
    broken[35] = 'G';  // first FRAME marker starts at offset 35
    CHECK_THROWS_AS(parse_y4m(broken), MalformedHeader);
  }
  SUBCASE("marker with parameters is accepted") {
    std::vector<unsigned char> payload = {'F', 'R', 'A', 'M', 'E', ' ', 'X', 'q', '\n',
                                          1, 2, 3, 4, 128, 128};
    auto [manifest, frames] = parse_y4m(y4m_bytes("YUV4MPEG2 W2 H2 F1:1\n", payload));
    CHECK(frames.size() == 1);
  }
}

TEST_CASE("ppm round trip is byte-exact on canonical data") {
  Frame f = testutil::make_frame(5, 3, [](int x, int y, int c) {
    return ((x * 31 + y * 57 + c * 19 + 5) % 256) / 255.0;
  });
  auto bytes = write_ppm(f);
  std::string head(bytes.begin(), bytes.begin() + 11);
  CHECK(head == "P6\n5 3\n255\n");

  Frame back = read_ppm(bytes);
  CHECK(back.width == f.width);
  CHECK(back.height == f.height);
  CHECK(back.pixels == f.pixels);

  auto bytes2 = write_ppm(back);
  CHECK(bytes == bytes2);
}

TEST_CASE("ppm write quantizes by rounding") {
  Frame f = testutil::constant_frame(1, 1, 0.5);
  auto bytes = write_ppm(f);
  CHECK(bytes[bytes.size() - 3] == 128);  // lround(127.5) rounds up

  f = testutil::constant_frame(1, 1, 1.0);
  bytes = write_ppm(f);
  CHECK(bytes[bytes.size() - 1] == 255);
}

TEST_CASE("ppm reader accepts comments and flexible whitespace") {
  std::string header = "P6\n# a comment line\n2 #inline\n1\n255\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  for (int i = 0; i < 6; ++i) bytes.push_back(static_cast<unsigned char>(10 * i));
  Frame f = read_ppm(bytes);
  CHECK(f.width == 2);
  CHECK(f.height == 1);
  CHECK(f.pixels[3] == doctest::Approx(30 / 255.0).epsilon(1e-14));
}

TEST_CASE("ppm errors are typed") {
  auto make = [](const std::string& header, std::size_t data) {
    std::vector<unsigned char> bytes(header.begin(), header.end());
    bytes.resize(bytes.size() + data, 7);
    return bytes;
  };
  CHECK_THROWS_AS(read_ppm(make("P5\n2 2\n255\n", 12)), MalformedHeader);
  CHECK_THROWS_AS(read_ppm(make("P6\n2 2\n65535\n", 24)), BadMaxval);
  CHECK_THROWS_AS(read_ppm(make("P6\n2 2\n255\n", 11)), TruncatedPixelData);
  CHECK_THROWS_AS(read_ppm(make("P6\n-2 2\n255\n", 12)), MalformedHeader);
  CHECK_THROWS_AS(read_ppm(make("P6\n2\n", 0)), MalformedHeader);
  CHECK_THROWS_AS(read_ppm(std::vector<unsigned char>{}), MalformedHeader);
}

TEST_CASE("manifest round trip and schema enforcement") {
  auto dir = testutil::temp_dir("manifest");
  DatasetManifest m;
  m.source = "clip.y4m";
  m.fps_num = 30;
  m.fps_den = 1;
  m.width = 64;
  m.height = 48;
  m.entries.push_back({0, clean_frame_name(0), Role::clean, std::nullopt});
  m.entries.push_back({0, adversarial_frame_name(0, 0.05), Role::adversarial, 0.05});
  m.entries.push_back({0, adversarial_frame_name(0, 0.2), Role::adversarial, 0.2});
  m.entries.push_back({1, clean_frame_name(1), Role::clean, std::nullopt});

  write_manifest(m, dir / "manifest.json");
  DatasetManifest back = load_manifest(dir / "manifest.json");
  CHECK(back.source == m.source);
  CHECK(back.fps_num == 30);
  REQUIRE(back.entries.size() == 4);
  CHECK(back.entries[1].epsilon == 0.05);
  CHECK(back.entries[1].role == Role::adversarial);

  // Rewriting the loaded manifest reproduces the file byte-for-byte.
  write_manifest(back, dir / "again.json");
  CHECK(testutil::read_file_bytes(dir / "manifest.json") ==
        testutil::read_file_bytes(dir / "again.json"));
}

TEST_CASE("manifest violations carry the offending key path") {
  auto dir = testutil::temp_dir("manifest_bad");
  auto write_text = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name);
    out << text;
    return dir / name;
  };

  auto base = [](const std::string& frames, const std::string& extra = "") {
    return "{\"source\":\"s\",\"fps_num\":1,\"fps_den\":1,\"width\":4,\"height\":4" + extra +
           ",\"frames\":[" + frames + "]}";
  };

  SUBCASE("unknown top-level key") {
    auto path = write_text("a.json", base("", ",\"fps\":30"));
    CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("manifest.fps"), SchemaViolation);
  }
  SUBCASE("unknown frame key") {
    auto path = write_text(
        "b.json", base("{\"index\":0,\"path\":\"f.ppm\",\"role\":\"clean\",\"note\":\"x\"}"));
    CHECK_THROWS_WITH_AS(load_manifest(path), doctest::Contains("manifest.frames[0].note"),
                         SchemaViolation);
  }
  SUBCASE("adversarial entries need epsilon") {
    auto path = write_text("c.json", base("{\"index\":0,\"path\":\"f.ppm\",\"role\":\"adversarial\"}"));
    CHECK_THROWS_AS(load_manifest(path), SchemaViolation);
  }
  SUBCASE("clean entries must not carry epsilon") {
    auto path = write_text(
        "d.json", base("{\"index\":0,\"path\":\"f.ppm\",\"role\":\"clean\",\"epsilon\":0.1}"));
    CHECK_THROWS_AS(load_manifest(path), SchemaViolation);
  }
  SUBCASE("entries must be sorted") {
    auto path = write_text("e.json",
                           base("{\"index\":1,\"path\":\"b.ppm\",\"role\":\"clean\"},"
                                "{\"index\":0,\"path\":\"a.ppm\",\"role\":\"clean\"}"));
    CHECK_THROWS_AS(load_manifest(path), SchemaViolation);
  }
  SUBCASE("adversarial sorts after clean at the same index") {
    auto path = write_text("f.json",
                           base("{\"index\":0,\"path\":\"b.ppm\",\"role\":\"adversarial\",\"epsilon\":0.1},"
                                "{\"index\":0,\"path\":\"a.ppm\",\"role\":\"clean\"}"));
    CHECK_THROWS_AS(load_manifest(path), SchemaViolation);
  }
  SUBCASE("wrong types are schema violations") {
    auto path = write_text("g.json", base("{\"index\":\"zero\",\"path\":\"f.ppm\",\"role\":\"clean\"}"));
    CHECK_THROWS_AS(load_manifest(path), SchemaViolation);
  }
  SUBCASE("invalid json") {
    auto path = write_text("h.json", "{nope");
    CHECK_THROWS_AS(load_manifest(path), SchemaViolation);
  }
}

TEST_CASE("frame naming convention") {
  CHECK(clean_frame_name(0) == "frame_000000.ppm");
  CHECK(clean_frame_name(123456) == "frame_123456.ppm");
  CHECK(epsilon_tag(0.05) == "0p05");
  CHECK(epsilon_tag(0.1) == "0p1");
  CHECK(epsilon_tag(0.2) == "0p2");
  CHECK(epsilon_tag(0.01) == "0p01");
  CHECK(adversarial_frame_name(3, 0.05) == "frame_000003_eps0p05.ppm");
  CHECK(adversarial_frame_name(42, 0.2) == "frame_000042_eps0p2.ppm");
}

TEST_CASE("file helpers raise IoError for missing paths") {
  CHECK_THROWS_AS(read_ppm_file("/nonexistent/nope.ppm"), IoError);
  CHECK_THROWS_AS(load_manifest("/nonexistent/manifest.json"), IoError);
}
