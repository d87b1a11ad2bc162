#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "balance/config.hpp"
#include "balance/csv.hpp"
#include "balance/svg.hpp"

using namespace balance;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

std::string error_key(const std::string& text) {
  try {
    parse(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<accepted>";
}

}  // namespace

TEST(Config, ParsesKeysAndComments) {
  const auto c = parse(
      "# comment\n"
      "kind = baseline\n"
      "seed = 17   # trailing comment\n"
      "lambda = 2.5\n"
      "g_hidden = 16, 8\n"
      "clf_rho = 10\n"
      "ema_start = auto\n"
      "label_proposal = inverse_frequency\n");
  EXPECT_EQ(c.kind, ExperimentKind::Baseline);
  EXPECT_EQ(c.trainer.seed, 17u);
  EXPECT_EQ(c.data.seed, 17u);
  EXPECT_EQ(c.classifier.seed, 17u);
  EXPECT_DOUBLE_EQ(c.trainer.lambda, 2.5);
  EXPECT_EQ(c.trainer.g_hidden, (std::vector<std::size_t>{16, 8}));
  ASSERT_TRUE(c.clf_rho.has_value());
  EXPECT_DOUBLE_EQ(*c.clf_rho, 10.0);
  EXPECT_FALSE(c.trainer.ema_start.has_value());
  EXPECT_EQ(c.trainer.label_proposal, LabelProposal::InverseFrequency);
}

TEST(Config, ErrorsNameTheKey) {
  EXPECT_EQ(error_key("seed = 1\n"), "kind");
  EXPECT_EQ(error_key("kind = train\nlamda = 1\n"), "lamda");
  EXPECT_EQ(error_key("kind = train\nlambda = abc\n"), "lambda");
  EXPECT_EQ(error_key("kind = train\nlambda = -2\n"), "lambda");
  EXPECT_EQ(error_key("kind = train\niterations = -5\n"), "iterations");
  EXPECT_EQ(error_key("kind = nonsense\n"), "kind");
  EXPECT_EQ(error_key("kind = train\nn_max = 10\n"), "n_max");
  EXPECT_EQ(error_key("kind = train\nalpha = 2\n"), "alpha");
  EXPECT_EQ(error_key("kind = fixed-stats\nfixed_n_hat = 1,2\n"), "fixed_n_hat");
  EXPECT_EQ(error_key("kind = train\ng_activation = swish\n"), "g_activation");
  EXPECT_EQ(error_key("kind = train\nsoft_counts = maybe\n"), "soft_counts");
  EXPECT_EQ(error_key("kind = train\njust text\n"), "line 2");
}

TEST(Config, BetaCanTrackAlpha) {
  const auto c = parse("kind = beta-ablation\nbeta = alpha\nalpha = 0.3\n");
  EXPECT_DOUBLE_EQ(c.trainer.beta, 0.3);
}

TEST(Config, SerializeRoundTrips) {
  const auto c = parse(
      "kind = classifier-sweep\nseed = 3\nrho = 50\nsweep_values = 1,10,100\nsweep_drop_tail = true\n"
      "clf_hidden = 24\nema_start = 500\ntight_tol = 1e-11\nsoft_counts = true\n");
  const std::string text = serialize(c);
  const auto back = parse(text);
  EXPECT_EQ(serialize(back), text);
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(config_hash(c).size(), 16u);
  auto other = c;
  other.trainer.lambda += 1.0;
  EXPECT_NE(config_hash(other), config_hash(c));
}

TEST(Config, DefaultsSerializeAndReload) {
  const std::string text = serialize(ExperimentConfig{});
  EXPECT_EQ(serialize(parse(text)), text);
}

TEST(Config, KindNames) {
  for (auto k : {ExperimentKind::Train, ExperimentKind::Baseline, ExperimentKind::FixedStats, ExperimentKind::Theory,
                 ExperimentKind::ClassifierSweep, ExperimentKind::BetaAblation, ExperimentKind::CycleSweep}) {
    EXPECT_EQ(parse_kind(kind_name(k)), k);
  }
}

TEST(Config, ShippedConfigsLoad) {
  const std::filesystem::path dir = BALANCE_SOURCE_DIR "/configs";
  std::size_t n = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".cfg") continue;
    EXPECT_NO_THROW(load_config(entry.path())) << entry.path();
    ++n;
  }
  EXPECT_GE(n, 5u);
}

TEST(Csv, FormatDoubleRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
  EXPECT_EQ(format_double(2.0), "2");
}

TEST(Csv, EscapeAndSplit) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  const auto f = csv_split("1,\"a,b\",\"q\"\"x\"");
  ASSERT_EQ(f.size(), 3u);
  EXPECT_EQ(f[1], "a,b");
  EXPECT_EQ(f[2], "q\"x");
}

TEST(Csv, WriterUsesLfAndRejectsRaggedRows) {
  const auto path = std::filesystem::temp_directory_path() / "balance_csv_test.csv";
  {
    CsvWriter w(path, {"a", "b"});
    w.row(std::vector<double>{1.5, 2});
    w.row(std::vector<std::string>{"x,y", "z"});
    EXPECT_THROW(w.row(std::vector<double>{1}), std::invalid_argument);
  }
  std::ifstream in(path, std::ios::binary);
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(text, "a,b\n1.5,2\n\"x,y\",z\n");
  const auto t = read_csv(path);
  EXPECT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.column("b"), 1u);
  EXPECT_THROW(t.column("c"), std::out_of_range);
}

TEST(Svg, ContainsProvenanceAxesAndLegend) {
  const std::string svg = render_line_plot({"Title <1>", "x", "y"},
                                           {{"series a", {0, 1, 2}, {1, 3, 2}}, {"series b", {0, 2}, {0, 1}}},
                                           "config_hash=abc -- seed=1");
  EXPECT_EQ(svg.rfind("<?xml", 0), 0u);
  EXPECT_NE(svg.find("<!-- config_hash=abc - - seed=1 -->"), std::string::npos);
  EXPECT_NE(svg.find("Title &lt;1&gt;"), std::string::npos);
  EXPECT_NE(svg.find(">series a</text>"), std::string::npos);
  EXPECT_NE(svg.find(">series b</text>"), std::string::npos);
  EXPECT_EQ(svg.find("nan"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  // Same inputs, same bytes.
  EXPECT_EQ(svg, render_line_plot({"Title <1>", "x", "y"},
                                  {{"series a", {0, 1, 2}, {1, 3, 2}}, {"series b", {0, 2}, {0, 1}}},
                                  "config_hash=abc -- seed=1"));
}

TEST(Svg, HandlesFlatAndEmptySeries) {
  EXPECT_NO_THROW(render_line_plot({}, {{"flat", {0, 1}, {2, 2}}}, ""));
  EXPECT_NO_THROW(render_line_plot({}, {}, ""));
  EXPECT_THROW(render_line_plot({}, {{"bad", {0, 1}, {2}}}, ""), std::invalid_argument);
}
