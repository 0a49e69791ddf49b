#include <gtest/gtest.h>

#include <cstdio>
#include <functional>
#include <fstream>
#include <limits>
#include <sstream>

#include "divlab/errors.hpp"
#include "divlab/io.hpp"

using namespace divlab;
using nlohmann::json;

namespace {

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(FormatNumber, Examples) {
  EXPECT_EQ(io::format_number(0.0), "0");
  EXPECT_EQ(io::format_number(0.8), "0.8");
  EXPECT_EQ(io::format_number(1.0 / 3.0), "0.3333333333");
  EXPECT_EQ(io::format_number(-2.5e-12), "-2.5e-12");
  EXPECT_EQ(io::format_number(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(io::format_number(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(io::format_number(std::nan("")), "nan");
}

TEST(ParseMatrix, RealAndComplexEntries) {
  const Matrix m = io::parse_matrix(json::parse("[[1, [0, -1]], [[0, 1], 2]]"), "m");
  EXPECT_EQ(m.rows(), 2);
  EXPECT_EQ(m(0, 1), Complex(0, -1));
  EXPECT_EQ(m(1, 1), Complex(2, 0));
  EXPECT_LE(max_abs(io::parse_matrix(io::matrix_to_json(m), "m") - m), 0.0);
}

TEST(ParseMatrix, ErrorsNameTheField) {
  EXPECT_NE(error_of([] { io::parse_matrix(json::parse("[[1, 2], [3]]"), "rho"); }).find("rho[1]"), std::string::npos);
  EXPECT_NE(error_of([] { io::parse_matrix(json::parse("[[1, \"x\"]]"), "rho"); }).find("rho[0][1]"),
            std::string::npos);
  EXPECT_NE(error_of([] { io::parse_matrix(json::parse("{}"), "rho"); }).find("rho"), std::string::npos);
  EXPECT_NE(error_of([] { io::parse_state(json::parse("[[1, 2], [0, 1]]"), "state"); }).find("Hermitian"),
            std::string::npos);
}

TEST(ParseChannel, Variants) {
  const QuantumMap g = io::parse_channel(json::parse(R"({"gad": {"gamma": 0.5, "N": 0.9}})"), "channel");
  EXPECT_LE(max_abs(choi(g) - choi(gad_channel(0.5, 0.9))), 1e-15);
  const QuantumMap r = io::parse_channel(json::parse(R"({"replacer": {"sigma0": [[1, 0], [0, 0]], "in_dim": 3}})"), "c");
  EXPECT_EQ(r.in_dim(), 3u);
  EXPECT_EQ(io::parse_channel(json::parse(R"({"identity": {"dim": 4}})"), "c").out_dim(), 4u);
  const QuantumMap u = io::parse_channel(json::parse(R"({"unitary": {"u": [[0, 1], [1, 0]]}})"), "c");
  EXPECT_EQ(u.kraus_count(), 1u);
  const QuantumMap back = io::parse_channel(io::channel_to_json(g), "c");
  EXPECT_LE(max_abs(choi(back) - choi(g)), 1e-15);
}

TEST(ParseChannel, ErrorsNameTheField) {
  EXPECT_NE(error_of([] { io::parse_channel(json::parse(R"({"gad": {"gamma": 0.5}})"), "channel_a"); })
                .find("channel_a.gad.N"),
            std::string::npos);
  EXPECT_NE(error_of([] { io::parse_channel(json::parse(R"({"gad": {"gamma": 2, "N": 0}})"), "channel_a"); })
                .find("channel_a"),
            std::string::npos);
  EXPECT_NE(error_of([] {
              io::parse_channel(json::parse(R"({"in_dim": 2, "out_dim": 2, "kraus": [[[1, 0]]]})"), "ch");
            }).find("ch.kraus[0]"),
            std::string::npos);
  EXPECT_NE(error_of([] { io::parse_channel(json::parse(R"({"in_dim": 2, "out_dim": 2, "kraus": [[[2, 0], [0, 2]]]})"), "ch"); })
                .find("ch"),
            std::string::npos);
}

TEST(ParseStrategy, Basic) {
  const Strategy s = io::parse_strategy(
      json::parse(R"({"maps": [{"replacer": {"sigma0": [[0.5, 0], [0, 0.5]], "in_dim": 1}}], "memory_dims": [1]})"),
      "strategy");
  EXPECT_EQ(s.n_rounds(), 1u);
  EXPECT_NE(error_of([] { io::parse_strategy(json::parse(R"({"maps": [], "memory_dims": []})"), "strategy"); })
                .find("strategy.maps"),
            std::string::npos);
}

TEST(LoadJson, MissingAndInvalidFiles) {
  EXPECT_NE(error_of([] { io::load_json_file("/nonexistent/divlab.json"); }).find("/nonexistent/divlab.json"),
            std::string::npos);
  const std::string path = ::testing::TempDir() + "divlab_bad.json";
  {
    std::ofstream f(path);
    f << "{not json";
  }
  EXPECT_NE(error_of([&] { io::load_json_file(path); }).find(path), std::string::npos);
  std::remove(path.c_str());
}

TEST(TableWriter, Csv) {
  std::ostringstream os;
  {
    io::TableWriter w(os, io::TableWriter::Format::csv, "divergence", {"family", "value", "n", "ok"});
    w.row({std::string("umegaki"), 0.5, std::int64_t{2}, true});
    w.row({std::string("a,b"), std::numeric_limits<double>::infinity(), std::int64_t{1}, false});
    w.summary("violations", std::int64_t{0});
    w.close();
  }
  const std::string expected = std::string("# divlab ") + std::string(io::version()) +
                               " divergence\nfamily,value,n,ok\numegaki,0.5,2,true\n\"a,b\",inf,1,false\n"
                               "# violations: 0\n";
  EXPECT_EQ(os.str(), expected);
}

TEST(TableWriter, JsonParsesBack) {
  std::ostringstream os;
  {
    io::TableWriter w(os, io::TableWriter::Format::json, "adversary", {"n", "beta"});
    w.row({std::int64_t{1}, 0.1});
    w.row({std::int64_t{2}, std::numeric_limits<double>::infinity()});
    w.summary("model", std::string("nonadaptive"));
    w.error("stopped");
  }
  const json j = json::parse(os.str());
  EXPECT_EQ(j.at("command"), "adversary");
  EXPECT_EQ(j.at("columns").size(), 2u);
  EXPECT_EQ(j.at("rows").size(), 2u);
  EXPECT_DOUBLE_EQ(j.at("rows")[0][1].get<double>(), 0.1);
  EXPECT_EQ(j.at("rows")[1][1], "inf");
  EXPECT_EQ(j.at("summary").at("model"), "nonadaptive");
  EXPECT_EQ(j.at("error"), "stopped");
}

TEST(TableWriter, RowWidthChecked) {
  std::ostringstream os;
  io::TableWriter w(os, io::TableWriter::Format::csv, "x", {"a"});
  EXPECT_THROW(w.row({0.1, 0.2}), ValidationError);
}
