#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "qseg/core.hpp"

using namespace qseg;

TEST_CASE("tokenize lowercases and splits on whitespace") {
  const Query q = tokenize("New York travel guides");
  CHECK(q.tokens == std::vector<std::string>{"new", "york", "travel", "guides"});
  CHECK(q.raw == "New York travel guides");
}

TEST_CASE("double quotes are separators, never token characters") {
  CHECK(tokenize("\"new york\" travel guides").tokens ==
        std::vector<std::string>{"new", "york", "travel", "guides"});
  CHECK(tokenize("a\"b").tokens == std::vector<std::string>{"a", "b"});
}

TEST_CASE("degenerate inputs raise EmptyQuery") {
  CHECK_THROWS_AS(tokenize("   \"\"  "), EmptyQueryError);
  CHECK_THROWS_AS(tokenize(""), EmptyQueryError);
  CHECK_THROWS_AS(tokenize("... --- !!!"), EmptyQueryError);
}

TEST_CASE("edge punctuation is stripped, interior punctuation kept") {
  CHECK(tokenize("(hello) world!").tokens ==
        std::vector<std::string>{"hello", "world"});
  CHECK(tokenize("rock'n'roll mother-in-law").tokens ==
        std::vector<std::string>{"rock'n'roll", "mother-in-law"});
  CHECK(tokenize("3.14 2024,").tokens == std::vector<std::string>{"3.14", "2024"});
}

TEST_CASE("tokenize handles non-ascii text") {
  CHECK(tokenize("Eyjafjallajökull ERUPTION").tokens ==
        std::vector<std::string>{"eyjafjallajökull", "eruption"});
  CHECK(tokenize("Café MÜNCHEN").tokens ==
        std::vector<std::string>{"café", "münchen"});
  // Invalid UTF-8 bytes decode to U+FFFD instead of corrupting the stream.
  const std::string broken = std::string("caf") + char(0xE9) + " bar";
  const Query q = tokenize(broken);
  REQUIRE(q.tokens.size() == 2);
  CHECK(q.tokens[1] == "bar");
}

TEST_CASE("tokenize is idempotent on its own output") {
  const std::vector<std::string> inputs = {
      "New York travel guides",
      "\"the hurt locker\" OSCARS 2010",
      "  weird   spacing\tand\ttabs ",
      "(parenthetical) [brackets] {braces}",
      "Eyjafjallajökull -- eruption?!",
  };
  for (const std::string& raw : inputs) {
    const Query q = tokenize(raw);
    const Query again = tokenize(detail::join(q.tokens));
    CHECK(again.tokens == q.tokens);
  }
}

TEST_CASE("tokenize idempotence on random noisy strings") {
  std::mt19937 rng(20113);
  const std::string alphabet = "abXY 19-.'\"()!\t";
  for (int trial = 0; trial < 300; ++trial) {
    std::string raw;
    const int len = 1 + int(rng() % 24);
    for (int i = 0; i < len; ++i) raw.push_back(alphabet[rng() % alphabet.size()]);
    std::vector<std::string> tokens = tokenize_text(raw);
    if (tokens.empty()) continue;
    CHECK(tokenize_text(detail::join(tokens)) == tokens);
  }
}

TEST_CASE("flavor_text produces the three submission variants") {
  const Query q = tokenize("\"new york\" travel guides");
  CHECK(flavor_text(q, QueryFlavor::Base) == "new york travel guides");
  CHECK(flavor_text(q, QueryFlavor::Quoted) == "\"new york\" travel guides");
  CHECK(flavor_text(q, QueryFlavor::Reversed) == "guides travel york new");
}

TEST_CASE("reversed flavor preserves the term multiset") {
  std::mt19937 rng(777);
  const std::vector<std::string> vocab = {"alpha", "beta", "gamma", "delta",
                                          "epsilon"};
  for (int trial = 0; trial < 100; ++trial) {
    std::string raw;
    const int len = 1 + int(rng() % 6);
    for (int i = 0; i < len; ++i) {
      if (i) raw += " ";
      const bool quote = rng() % 4 == 0;
      if (quote) raw += "\"";
      raw += vocab[rng() % vocab.size()];
      if (quote) raw += "\"";
    }
    const Query q = tokenize(raw);
    auto base = detail::split_terms(flavor_text(q, QueryFlavor::Base));
    auto rev = detail::split_terms(flavor_text(q, QueryFlavor::Reversed));
    std::sort(base.begin(), base.end());
    std::sort(rev.begin(), rev.end());
    CHECK(base == rev);
  }
}

TEST_CASE("segmentation enforces the partition invariants") {
  const Query q = tokenize("a b c d");
  CHECK_NOTHROW(Segmentation(q, {{0, 1}, {2, 3}}));
  CHECK_NOTHROW(Segmentation(q, {{0, 3}}));
  CHECK_THROWS_AS(Segmentation(q, {{0, 1}}), std::invalid_argument);  // gap
  CHECK_THROWS_AS(Segmentation(q, {{0, 1}, {1, 3}}), std::invalid_argument);
  CHECK_THROWS_AS(Segmentation(q, {{2, 3}, {0, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(Segmentation(q, {{0, 1}, {2, 4}}), std::invalid_argument);
  CHECK_THROWS_AS(Segmentation(q, std::vector<Span>{}), std::invalid_argument);
}

TEST_CASE("random partitions always construct, mutated ones never") {
  std::mt19937 rng(4242);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 8;
    std::string raw;
    for (std::size_t i = 0; i < n; ++i) raw += (i ? " t" : "t") + std::to_string(i);
    const Query q = tokenize(raw);

    std::vector<Span> segs;
    std::size_t start = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (rng() % 2) {
        segs.push_back(Span{start, i});
        start = i + 1;
      }
    }
    segs.push_back(Span{start, n - 1});
    CHECK_NOTHROW(Segmentation(q, segs));

    // Shift, grow or drop one span; every mutation breaks the partition.
    std::vector<Span> broken = segs;
    const std::size_t victim = rng() % broken.size();
    switch (rng() % 3) {
      case 0:
        broken[victim].first += 1;
        break;
      case 1:
        broken[victim].last += 1;
        break;
      default:
        broken.erase(broken.begin() + victim);
        break;
    }
    bool valid = true;
    try {
      Segmentation s(q, broken);
      (void)s;
    } catch (const std::invalid_argument&) {
      valid = false;
    }
    CHECK_FALSE(valid);
  }
}

TEST_CASE("bracket form brackets multi-token segments only") {
  const Query q = tokenize("new york travel guides");
  CHECK(Segmentation(q, {{0, 1}, {2, 2}, {3, 3}}).bracket_form() ==
        "[new york] travel guides");
  CHECK(Segmentation(q, {{0, 3}}).bracket_form() == "[new york travel guides]");
  CHECK(Segmentation::singletons(q).bracket_form() == "new york travel guides");
}

TEST_CASE("parse_gold reads bracket form") {
  const GoldRecord rec = parse_gold("[new york] [travel guides]");
  CHECK(rec.query.tokens ==
        std::vector<std::string>{"new", "york", "travel", "guides"});
  CHECK(rec.reference.segments() == std::vector<Span>{{0, 1}, {2, 3}});
  CHECK(rec.reference.bracket_form() == "[new york] [travel guides]");
  // Raw keeps the reference grouping as user-style quotes, so the quoted
  // flavor preserves segmentation information for expert logs too.
  CHECK(rec.query.raw == "\"new york\" \"travel guides\"");
}

TEST_CASE("parse_gold reads quote form with singleton leftovers") {
  const GoldRecord rec = parse_gold("\"new york\" travel guides");
  CHECK(rec.reference.segments() == std::vector<Span>{{0, 1}, {2, 2}, {3, 3}});
  CHECK(rec.query.raw == "\"new york\" travel guides");
  CHECK(rec.reference.bracket_form() == "[new york] travel guides");
}

TEST_CASE("parse_gold mixes bare tokens and groups") {
  const GoldRecord rec = parse_gold("best [new york] pizza");
  CHECK(rec.reference.segments() == std::vector<Span>{{0, 0}, {1, 2}, {3, 3}});
  const GoldRecord plain = parse_gold("three plain words");
  CHECK(plain.reference.segments() ==
        std::vector<Span>{{0, 0}, {1, 1}, {2, 2}});
}

TEST_CASE("parse_gold rejects malformed lines") {
  CHECK_THROWS_AS(parse_gold("[new york"), UnbalancedDelimitersError);
  CHECK_THROWS_AS(parse_gold("new] york"), UnbalancedDelimitersError);
  CHECK_THROWS_AS(parse_gold("[a [b] c]"), UnbalancedDelimitersError);
  CHECK_THROWS_AS(parse_gold("\"new york travel"), UnbalancedDelimitersError);
  CHECK_THROWS_AS(parse_gold("[]"), EmptyQueryError);
  CHECK_THROWS_AS(parse_gold("   "), EmptyQueryError);
}

TEST_CASE("parse_gold round-trips through canonical bracket form") {
  const std::vector<std::string> lines = {
      "[new york] [travel guides]",
      "\"new york\" travel guides",
      "best [new york] pizza",
      "[the hurt locker] oscars",
      "plain words only",
  };
  for (const std::string& line : lines) {
    const GoldRecord rec = parse_gold(line);
    const std::string canonical = rec.reference.bracket_form();
    const GoldRecord again = parse_gold(canonical);
    CHECK(again.reference.segments() == rec.reference.segments());
    CHECK(again.query.tokens == rec.query.tokens);
    CHECK(again.reference.bracket_form() == canonical);
  }
}

TEST_CASE("gold queries satisfy the query invariant") {
  // tokens must equal tokenize(raw) for both gold syntaxes.
  for (const char* line :
       {"[new york] [travel guides]", "\"new york\" travel guides",
        "best [new york] pizza"}) {
    const GoldRecord rec = parse_gold(line);
    CHECK(tokenize_text(rec.query.raw) == rec.query.tokens);
  }
}

TEST_CASE("load_gold_dataset parses ids, comments and blank lines") {
  const auto path =
      std::filesystem::temp_directory_path() / "qseg_core_test_gold.tsv";
  {
    std::ofstream out(path);
    out << "# comment line\n";
    out << "q1\t[new york] [travel guides]\n";
    out << "\n";
    out << "q2\t\"grand canyon\" tours\n";
  }
  const auto records = load_gold_dataset(path);
  REQUIRE(records.size() == 2);
  CHECK(records[0].query.id == "q1");
  CHECK(records[1].query.id == "q2");
  CHECK(records[0].source_tag == "qseg_core_test_gold.tsv");
  std::filesystem::remove(path);
}

TEST_CASE("load_gold_dataset reports the failing line") {
  const auto path =
      std::filesystem::temp_directory_path() / "qseg_core_test_bad.tsv";
  {
    std::ofstream out(path);
    out << "q1\t[ok query]\n";
    out << "q2 missing tab\n";
  }
  CHECK_THROWS_WITH(load_gold_dataset(path),
                    Catch::Matchers::ContainsSubstring(":2"));
  std::filesystem::remove(path);
}
