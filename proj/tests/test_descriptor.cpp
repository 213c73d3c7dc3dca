#include <catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <tdlw/descriptor.hpp>
#include <tdlw/nyquist.hpp>
#include <tdlw/report.hpp>
#include <tdlw/rootfinder.hpp>
#include <tdlw/simulate.hpp>

#include "test_helpers.hpp"

using namespace tdlw;
using namespace tdlw_test;

namespace {

std::string data_path(const std::string& leaf) {
  return std::string(TDLW_DATA_DIR) + "/" + leaf;
}

Descriptor parse_text(const std::string& text) {
  std::istringstream in(text);
  return parse_descriptor(in);
}

int parse_error_line(const std::string& text) {
  try {
    parse_text(text);
  } catch (const ParseError& e) {
    return e.line;
  }
  return -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int count_lines(const std::string& text) {
  int lines = 0;
  for (char ch : text)
    if (ch == '\n') ++lines;
  return lines;
}

}  // namespace

TEST_CASE("descriptor: example1 fixture parses to the rank one system") {
  const Descriptor d = load_descriptor(data_path("example1.tds"));
  CHECK(d.name == "example1");
  CHECK(d.order == 3);
  CHECK(d.h == 2.0);
  REQUIRE(d.A.has_value());
  REQUIRE(d.b.has_value());
  REQUIRE(d.c.has_value());
  CHECK_FALSE(d.Ad.has_value());
  CHECK_FALSE(d.B.has_value());

  Mat a(3, 3);
  a << -1, 2, -1, -4, -1, -3, -2, -3, -2;
  CHECK(max_abs_diff(*d.A, a) == 0.0);
  Vec b(3), c(3);
  b << -1, 0, 1;
  c << -1, 1, -2;
  CHECK(max_abs_diff(*d.b, b) == 0.0);
  CHECK(max_abs_diff(*d.c, c) == 0.0);

  // The rank one pair expands to the expected delayed matrix.
  const TimeDelaySystem sys = descriptor_system(d);
  Mat ad(3, 3);
  ad << 1, -1, 2, 0, 0, 0, -1, 1, -2;
  CHECK(max_abs_diff(sys.Ad, ad) == 0.0);
  CHECK(sys.h == 2.0);
}

TEST_CASE("descriptor: example2 fixture is a delay free plant with input") {
  const Descriptor d = load_descriptor(data_path("example2.tds"));
  CHECK(d.order == 2);
  CHECK(d.h == 0.2);
  REQUIRE(d.Ad.has_value());
  CHECK(d.Ad->isZero(0.0));
  REQUIRE(d.B.has_value());
  Vec bin(2);
  bin << 0, 1;
  CHECK(max_abs_diff(*d.B, bin) == 0.0);
  const TimeDelaySystem sys = descriptor_system(d);
  CHECK(sys.Ad.isZero(0.0));
}

TEST_CASE("descriptor: example3 fixture is already in CC form") {
  const Descriptor d = load_descriptor(data_path("example3.tds"));
  const TimeDelaySystem sys = descriptor_system(d);
  const auto cc_opt = is_cc_form(sys);
  REQUIRE(cc_opt.has_value());
  const CCFormSystem& cc = *cc_opt;
  Vec a(3), ad(3);
  a << -7, -2, -4;
  ad << 5, -3, -1;
  CHECK(max_abs_diff(cc.a, a) == 0.0);
  CHECK(max_abs_diff(cc.ad, ad) == 0.0);
  REQUIRE(d.B.has_value());
  CHECK((*d.B)(2) == 1.0);
}

TEST_CASE("descriptor: remaining fixtures load or fail as designed") {
  const Descriptor scalar = load_descriptor(data_path("scalar_input_delay.tds"));
  CHECK(scalar.order == 1);
  CHECK(descriptor_system(scalar).Ad.isZero(0.0));

  const Descriptor unc = load_descriptor(data_path("uncontrollable.tds"));
  CHECK(unc.order == 3);
  CHECK_THROWS_AS(to_cc_form(RankOneDelaySystem(*unc.A, *unc.b, *unc.c, unc.h)),
                  UncontrollableError);

  try {
    load_descriptor(data_path("malformed.tds"));
    FAIL("malformed fixture should not parse");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("unbalanced") != std::string::npos);
    CHECK(e.line == 7);
  }
}

TEST_CASE("descriptor: minimal text defaults to a zero delayed term") {
  const Descriptor d = parse_text(
      "order: 2\n"
      "h: 1.5\n"
      "A: [[0, 1], [-2, -3]]\n");
  CHECK(d.name.empty());
  const TimeDelaySystem sys = descriptor_system(d);
  CHECK(sys.Ad.isZero(0.0));
  CHECK(sys.h == 1.5);
}

TEST_CASE("descriptor: values continue across lines and ignore comments") {
  const Descriptor d = parse_text(
      "# leading remark\n"
      "name: spread out   # trailing remark\n"
      "order: 2\n"
      "h: 0.5\n"
      "A: [[0,   # first row\n"
      "     1],\n"
      "    [-1, 0]]\n"
      "A_d: [\n"
      "  [0.1, 0],\n"
      "  [0, 0.1]\n"
      "]\n");
  CHECK(d.name == "spread out");
  REQUIRE(d.Ad.has_value());
  CHECK((*d.Ad)(0, 0) == 0.1);
  CHECK((*d.A)(0, 1) == 1.0);
}

TEST_CASE("descriptor: parse failures carry the offending line") {
  // Missing colon.
  CHECK(parse_error_line("order: 2\nh: 1\nA: [[1,0],[0,1]]\njunk line\n") == 4);
  // Unknown key.
  CHECK(parse_error_line("order: 1\nh: 1\nA: [[1]]\nQ: 3\n") == 4);
  // Malformed JSON scalar.
  CHECK(parse_error_line("order: two\n") == 1);
  // Non integer order.
  CHECK(parse_error_line("order: 2.5\n") == 1);
  // Non positive h.
  CHECK(parse_error_line("order: 1\nh: -0.5\n") == 2);
  // Matrix entries must be numbers.
  CHECK(parse_error_line("order: 1\nh: 1\nA: [[\"x\"]]\n") == 3);
  // Jagged rows.
  CHECK(parse_error_line("order: 2\nh: 1\nA: [[1,2],[3]]\n") == 3);
  // Flat array where a matrix is needed.
  CHECK(parse_error_line("order: 2\nh: 1\nA: [1, 2]\n") == 3);
  // Nested array where a vector is needed.
  CHECK(parse_error_line(
            "order: 2\nh: 1\nA: [[1,0],[0,1]]\nb: [[1],[0]]\nc: [1, 0]\n") ==
        4);
  // Unbalanced brackets at end of input.
  CHECK(parse_error_line("order: 2\nh: 1\nA: [[1,0],\n") == 3);
  // Missing value after the colon.
  CHECK(parse_error_line("order:\n") == 1);
}

TEST_CASE("descriptor: structural validation after parsing") {
  CHECK_THROWS_AS(parse_text("h: 1\nA: [[1]]\n"), ParseError);   // no order
  CHECK_THROWS_AS(parse_text("order: 1\nA: [[1]]\n"), ParseError);  // no h
  CHECK_THROWS_AS(parse_text("order: 1\nh: 1\n"), ParseError);   // no A
  // A_d and b/c are mutually exclusive.
  CHECK_THROWS_AS(
      parse_text("order: 1\nh: 1\nA: [[1]]\nA_d: [[1]]\nb: [1]\nc: [1]\n"),
      ParseError);
  // b needs c.
  CHECK_THROWS_AS(parse_text("order: 1\nh: 1\nA: [[1]]\nb: [1]\n"), ParseError);
  // Dimension mismatches against `order`.
  CHECK_THROWS_AS(parse_text("order: 3\nh: 1\nA: [[1,0],[0,1]]\n"), ParseError);
  CHECK_THROWS_AS(
      parse_text("order: 2\nh: 1\nA: [[1,0],[0,1]]\nB: [1]\n"), ParseError);
  // Unreadable path reports through the same error type.
  CHECK_THROWS_AS(load_descriptor(data_path("no_such_file.tds")), ParseError);
}

TEST_CASE("descriptor: format and re-parse round trip is exact") {
  std::mt19937 rng(411);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    Descriptor d;
    const int n = 1 + trial % 4;
    d.name = trial % 2 ? "round trip" : "";
    d.order = n;
    d.h = 0.25 + std::abs(coef(rng));
    Mat a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) a(i, j) = coef(rng);
    d.A = a;
    if (trial % 3 == 0) {
      Mat ad(n, n);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) ad(i, j) = coef(rng);
      d.Ad = ad;
    } else {
      Vec b(n), c(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        b(i) = coef(rng);
        c(i) = coef(rng);
      }
      d.b = b;
      d.c = c;
    }
    if (trial % 2) d.B = Vec::Ones(n);

    const Descriptor back = parse_text(format_descriptor(d));
    CHECK(back.name == d.name);
    CHECK(back.order == d.order);
    CHECK(back.h == d.h);
    CHECK(max_abs_diff(*back.A, *d.A) == 0.0);
    CHECK(back.Ad.has_value() == d.Ad.has_value());
    if (d.Ad) CHECK(max_abs_diff(*back.Ad, *d.Ad) == 0.0);
    if (d.b) {
      CHECK(max_abs_diff(*back.b, *d.b) == 0.0);
      CHECK(max_abs_diff(*back.c, *d.c) == 0.0);
    }
    CHECK(back.B.has_value() == d.B.has_value());
  }

  // The bundled fixtures survive the same loop.
  for (const char* leaf : {"example1.tds", "example2.tds", "example3.tds"}) {
    const Descriptor d = load_descriptor(data_path(leaf));
    const Descriptor back = parse_text(format_descriptor(d));
    CHECK(back.name == d.name);
    CHECK(max_abs_diff(*back.A, *d.A) == 0.0);
  }
}

TEST_CASE("report: csv writers emit one row per record") {
  std::vector<LocatedRoot> roots;
  roots.push_back({cplx(-0.5, 1.25), 1e-12, 1});
  roots.push_back({cplx(0.25, 0.0), 2e-11, 2});
  const std::string path = "test_report_roots.csv";
  write_roots_csv(path, roots);
  const std::string text = slurp(path);
  CHECK(text.rfind("re,im,residual,multiplicity\n", 0) == 0);
  CHECK(count_lines(text) == 3);
  CHECK(text.find("-0.5,1.25,") != std::string::npos);
  std::remove(path.c_str());
}

TEST_CASE("report: spectrum and nyquist plots are self contained svg") {
  std::vector<LocatedRoot> roots;
  roots.push_back({cplx(-1.0, 2.0), 1e-12, 1});
  write_spectrum_svg("test_report_spec.svg", roots,
                     SearchRegion{-3.0, 1.0, 0.0, 5.0});
  const std::string spec = slurp("test_report_spec.svg");
  CHECK(spec.find("<svg") != std::string::npos);
  CHECK(spec.find("</svg>") != std::string::npos);

  const CharFunction p = polynomial({2.0, -1.0, 1.0});
  const NyquistCurve curve = nyquist_sweep(p, 0.0);
  write_curve_csv("test_report_curve.csv", curve);
  const std::string csv = slurp("test_report_curve.csv");
  CHECK(csv.rfind("omega,re,im,modulus\n", 0) == 0);
  CHECK(count_lines(csv) == static_cast<int>(curve.omegas.size()) + 1);

  write_nyquist_svg("test_report_nyq.svg", {{&curve, "boundary"}});
  const std::string svg = slurp("test_report_nyq.svg");
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("boundary") != std::string::npos);

  std::remove("test_report_spec.svg");
  std::remove("test_report_curve.csv");
  std::remove("test_report_nyq.svg");
}

TEST_CASE("report: trajectory writers cover every sample") {
  Mat a(1, 1), ad(1, 1);
  a << -1.0;
  ad << 0.0;
  const TimeDelaySystem sys(a, ad, 1.0);
  const auto hist = HistorySegment::constant(Vec::Ones(1), sys.h);
  const Trajectory traj = integrate(sys, hist, 2.0, 0.1);
  write_trajectory_csv("test_report_traj.csv", traj);
  const std::string csv = slurp("test_report_traj.csv");
  CHECK(csv.rfind("t,x1,norm\n", 0) == 0);
  CHECK(count_lines(csv) == static_cast<int>(traj.times.size()) + 1);
  write_trajectory_svg("test_report_traj.svg", traj);
  CHECK(slurp("test_report_traj.svg").find("</svg>") != std::string::npos);
  std::remove("test_report_traj.csv");
  std::remove("test_report_traj.svg");
}
