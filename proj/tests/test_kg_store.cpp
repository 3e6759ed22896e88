#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"
#include "kgaug/error.hpp"
#include "kgaug/kg_store.hpp"

using namespace kgaug;

TEST_CASE("parse_triples builds the vocabulary in first-appearance order") {
  std::istringstream in("a\tr\tb\nb\tr\tc\n");
  TripleFile f = parse_triples(in);
  CHECK(f.vocab.num_entities() == 3);
  CHECK(f.vocab.num_relations() == 1);
  CHECK(f.triples.size() == 2);
  CHECK(f.vocab.entities.name(0) == "a");
  CHECK(f.vocab.entities.name(2) == "c");
  CHECK(f.duplicates == 0);
  CHECK(f.vocab.descriptions.size() == 3);
}

TEST_CASE("parse_triples deduplicates and counts") {
  std::istringstream in("a\tr\tb\na\tr\tb\n");
  TripleFile f = parse_triples(in);
  CHECK(f.triples.size() == 1);
  CHECK(f.duplicates == 1);
}

TEST_CASE("parse_triples skips comments, blank lines and CR") {
  std::istringstream in("# header\n\na\tr\tb\r\n   \n# trailing\n");
  TripleFile f = parse_triples(in);
  CHECK(f.triples.size() == 1);
  CHECK(f.vocab.entities.name(1) == "b");
}

TEST_CASE("parse_triples reports the malformed line") {
  std::istringstream in("a r b\n");
  try {
    parse_triples(in, "kg.tsv");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(std::string(e.what()).find("kg.tsv:1") != std::string::npos);
  }
  std::istringstream in2("a\tr\tb\na\tr\n");
  try {
    parse_triples(in2);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream extra("a\tr\tb\tc\n");
  CHECK_THROWS_AS(parse_triples(extra), ParseError);
}

TEST_CASE("parse_triples rejects an empty file") {
  std::istringstream in("# nothing\n\n");
  CHECK_THROWS_AS(parse_triples(in), DomainError);
}

TEST_CASE("missing file is an IO error") {
  CHECK_THROWS_AS(parse_triples(std::filesystem::path("/nonexistent/kg.tsv")), IoError);
}

TEST_CASE("triple file round trip is the identity") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> ent(0, 30), rel(0, 4);
  std::ostringstream src;
  for (int i = 0; i < 200; ++i) {
    src << "e" << ent(rng) << '\t' << "rel_" << rel(rng) << '\t' << "e" << ent(rng) << '\n';
  }
  std::istringstream in(src.str());
  TripleFile a = parse_triples(in);
  std::ostringstream dumped;
  write_triples(dumped, a.vocab, a.triples);
  std::istringstream in2(dumped.str());
  TripleFile b = parse_triples(in2);
  CHECK(b.duplicates == 0);
  CHECK(a.vocab.entities.names() == b.vocab.entities.names());
  CHECK(a.vocab.relations.names() == b.vocab.relations.names());
  CHECK(a.triples.triples() == b.triples.triples());
}

TEST_CASE("membership index agrees with a linear scan") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<Id> id(0, 5);
  std::vector<Triple> listed;
  TripleSet set;
  for (int i = 0; i < 60; ++i) {
    Triple t{id(rng), id(rng), id(rng)};
    if (set.insert(t)) listed.push_back(t);
  }
  CHECK(set.triples() == listed);
  for (Id h = 0; h < 6; ++h)
    for (Id r = 0; r < 6; ++r)
      for (Id t = 0; t < 6; ++t) {
        const Triple q{h, r, t};
        const bool scan = std::find(listed.begin(), listed.end(), q) != listed.end();
        CHECK(set.contains(q) == scan);
      }
}

TEST_CASE("parse_triples_with resolves names against an existing vocabulary") {
  std::istringstream kg("a\tr\tb\nb\tr\tc\n");
  TripleFile f = parse_triples(kg);
  std::istringstream held("c\tr\ta\n");
  TripleSet s = parse_triples_with(held, f.vocab);
  REQUIRE(s.size() == 1);
  CHECK(s.triples()[0] == Triple{2, 0, 0});
  std::istringstream unknown("a\tq\tb\n");
  CHECK_THROWS_AS(parse_triples_with(unknown, f.vocab), ParseError);
}

TEST_CASE("parse_descriptions tokenizes and reports unknown entities") {
  std::istringstream kg("a\tr\tb\n");
  TripleFile f = parse_triples(kg);
  std::istringstream desc("a\tThe First  Node\nzz\tnobody\n");
  const std::size_t skipped = parse_descriptions(desc, f.vocab);
  CHECK(skipped == 1);
  CHECK(f.vocab.descriptions[0] == std::vector<std::string>{"the", "first", "node"});
  CHECK(f.vocab.descriptions[1].empty());
}

TEST_CASE("corrupt: both outcomes reachable with two entities") {
  std::mt19937_64 rng(13);
  const Triple t{0, 0, 1};
  bool head = false, tail = false;
  for (int i = 0; i < 100; ++i) {
    const Triple c = corrupt(t, 2, rng);
    CHECK(!(c == t));
    if (c == Triple{1, 0, 1}) head = true;
    else if (c == Triple{0, 0, 0}) tail = true;
    else FAIL("unexpected corruption");
  }
  CHECK(head);
  CHECK(tail);
}

TEST_CASE("corrupt: seeded determinism and single-entity error") {
  std::mt19937_64 a(5), b(5);
  for (int i = 0; i < 50; ++i) CHECK(corrupt({1, 0, 2}, 10, a) == corrupt({1, 0, 2}, 10, b));
  CHECK_THROWS_AS(corrupt({0, 0, 0}, 1, a), DomainError);
}

TEST_CASE("corrupt: head/tail ratio and uniform replacement") {
  std::mt19937_64 rng(14);
  const Triple t{3, 0, 7};
  const int n = 10000;
  int heads = 0;
  std::vector<int> counts(10, 0);
  for (int i = 0; i < n; ++i) {
    const Triple c = corrupt(t, 10, rng);
    CHECK(!(c == t));
    if (c.head != t.head) {
      ++heads;
      ++counts[c.head];
    }
  }
  const double ratio = static_cast<double>(heads) / n;
  CHECK(ratio > 0.47);
  CHECK(ratio < 0.53);
  CHECK(counts[3] == 0);
  // 9 admissible heads, ~555 draws each; 5 sigma band.
  for (int e = 0; e < 10; ++e) {
    if (e == 3) continue;
    CHECK(std::abs(counts[e] - heads / 9.0) < 5 * std::sqrt(heads / 9.0));
  }
}
