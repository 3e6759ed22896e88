#include <random>
#include <sstream>

#include "doctest.h"
#include "grad_check.hpp"
#include "kgaug/error.hpp"
#include "kgaug/numerics/ops.hpp"
#include "kgaug/text_encoder.hpp"

using namespace kgaug;
using num::Graph;
using num::Parameter;
using num::Tensor;
using num::Var;

namespace {

TextVocab vocab_of(std::initializer_list<const char*> texts) {
  TextVocab v;
  for (const char* t : texts) v.add_text(t);
  return v;
}

}  // namespace

TEST_CASE("tokenize pads, truncates and maps unknown words") {
  TextVocab v = vocab_of({"the cat sat on a mat"});
  TokenSequence s = tokenize("The cat sat", v, 5);
  CHECK(s.length == 3);
  CHECK(s.ids.size() == 5);
  CHECK(s.mask == std::vector<bool>{true, true, true, false, false});
  CHECK(s.ids[0] == v.id("the"));
  CHECK(s.ids[3] == TextVocab::pad);

  TokenSequence t = tokenize("one two three four five six seven eight nine ten", v, 5);
  CHECK(t.length == 5);
  for (Id id : t.ids) CHECK(id == TextVocab::unknown);

  TokenSequence p = tokenize("Cat, sat!", v, 4);
  CHECK(p.length == 2);
  CHECK(p.ids[0] == v.id("cat"));

  CHECK_THROWS_AS(tokenize("   ", v, 5), DomainError);
  CHECK_THROWS_AS(tokenize("", v, 5), DomainError);
  CHECK_THROWS_AS(tokenize("?!", v, 5), DomainError);
}

TEST_CASE("load_word_vectors") {
  std::istringstream ok("cat 1 2 3\ndog 4 5 6\n");
  WordVectors w = load_word_vectors(ok);
  CHECK(w.size() == 2);
  CHECK(w.dim() == 3);
  CHECK(w.matrix.at(1, 2) == 6.0);

  std::istringstream dup("cat 1 2 3\ncat 9 9 9\n");
  WordVectors d = load_word_vectors(dup);
  CHECK(d.size() == 1);
  CHECK(d.duplicates == 1);
  CHECK(d.matrix.at(0, 0) == 1.0);

  std::istringstream bad("cat 1 2 3\ndog 4 5\n");
  try {
    load_word_vectors(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("init_word_table uses pretrained rows and zero padding") {
  TextVocab v = vocab_of({"cat dog"});
  std::istringstream in("cat 1 2\n");
  WordVectors w = load_word_vectors(in);
  std::mt19937_64 rng(1);
  Tensor t = init_word_table(v, 2, 0.1, rng, &w);
  CHECK(t.at(TextVocab::pad, 0) == 0.0);
  CHECK(t.at(v.id("cat"), 0) == 1.0);
  CHECK(t.at(v.id("cat"), 1) == 2.0);
  CHECK(t.at(v.id("dog"), 0) != 0.0);
  CHECK_THROWS_AS(init_word_table(v, 3, 0.1, rng, &w), ConfigError);
}

struct EncoderFixture {
  TextVocab vocab = vocab_of({"alpha beta gamma delta epsilon"});
  std::mt19937_64 rng{5};
  Parameter words{"words", init_word_table(vocab, 4, 0.5, rng)};
  num::LstmParams lstm = num::LstmParams::random("lstm", 4, 3, rng);
  Parameter proj{"proj", testing::random_tensor(rng, {3, 5})};

  Tensor run(const std::vector<const TokenSequence*>& batch) {
    Graph g(false);
    num::LstmVars vars = num::bind(g, lstm);
    return encode(g, g.param(words), batch, vars, g.param(proj)).value();
  }
};

TEST_CASE_FIXTURE(EncoderFixture, "encode with zero LSTM parameters gives a zero context") {
  lstm = num::LstmParams::zeros("lstm", 4, 3);
  TokenSequence s = tokenize("alpha beta", vocab, 4);
  Tensor c = run({&s});
  for (double x : c.data()) CHECK(x == 0.0);
}

TEST_CASE_FIXTURE(EncoderFixture, "encode output is a ReLU: flipping the projection zeroes positive entries") {
  TokenSequence s = tokenize("alpha beta gamma", vocab, 4);
  Tensor before = run({&s});
  for (double& x : proj.value.data()) x = -x;
  Tensor after = run({&s});
  for (std::size_t k = 0; k < before.size(); ++k) {
    CHECK(before[k] >= 0.0);
    if (before[k] > 0.0) CHECK(after[k] == 0.0);
  }
}

TEST_CASE_FIXTURE(EncoderFixture, "single-token mean equals the first hidden state") {
  TokenSequence s = tokenize("gamma", vocab, 4);
  Graph g(false);
  num::LstmVars vars = num::bind(g, lstm);
  Var table = g.param(words);
  Var mean = encode_mean(g, table, {&s}, vars);
  std::vector<std::size_t> ids{s.ids[0]};
  num::LstmState h1 = num::lstm_cell(num::gather_rows(table, ids), num::lstm_zero_state(g, 1, 3), vars);
  CHECK(mean.value() == h1.h.value());
}

TEST_CASE_FIXTURE(EncoderFixture, "encode ignores the content of padded positions") {
  TokenSequence s = tokenize("alpha delta", vocab, 6);
  TokenSequence long_seq = tokenize("beta beta beta beta beta beta", vocab, 6);
  Tensor alone = run({&s});
  Tensor batched = run({&s, &long_seq});
  for (std::size_t k = 0; k < alone.size(); ++k) CHECK(alone[k] == batched.at(0, k));
  TokenSequence junk = s;
  for (std::size_t t = s.length; t < junk.ids.size(); ++t) junk.ids[t] = vocab.id("epsilon");
  Tensor with_junk = run({&junk, &long_seq});
  CHECK(with_junk == batched);
}

TEST_CASE_FIXTURE(EncoderFixture, "context entries are non-negative on random inputs") {
  std::uniform_int_distribution<int> len(1, 6);
  std::vector<std::string> pool{"alpha", "beta", "gamma", "delta", "epsilon", "zzz"};
  std::uniform_int_distribution<std::size_t> word(0, pool.size() - 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::string text;
    for (int i = len(rng); i > 0; --i) text += pool[word(rng)] + " ";
    TokenSequence s = tokenize(text, vocab, 6);
    proj.value = testing::random_tensor(rng, {3, 5});
    const Tensor c = run({&s});
    for (double x : c.data()) CHECK(x >= 0.0);
  }
}

TEST_CASE_FIXTURE(EncoderFixture, "encoder gradients match finite differences") {
  TokenSequence a = tokenize("alpha beta gamma", vocab, 4);
  TokenSequence b = tokenize("delta", vocab, 4);
  // Shift the projection so ReLU kinks stay away from the evaluation point.
  auto res = testing::check_gradients(
      {&words, &lstm.input_weights, &lstm.recurrent_weights, &lstm.bias, &proj}, [&](Graph& g) {
        num::LstmVars vars = num::bind(g, lstm);
        return testing::weighted_sum(g, encode(g, g.param(words), {&a, &b}, vars, g.param(proj)));
      });
  INFO(res.worst_param);
  CHECK(res.worst < 1e-4);
}

TEST_CASE("read_dataset") {
  std::istringstream in("sports\tthe match\npolitics\tthe vote\nsports\tgoal!\n");
  Dataset d = read_dataset(in);
  CHECK(d.labels == std::vector<std::string>{"politics", "sports"});
  CHECK(d.examples.size() == 3);
  CHECK(d.examples[0].label == 1);

  std::istringstream test("politics\tx\nweather\ty\n");
  try {
    read_dataset(test, "test.tsv", &d.labels);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream notab("sports the match\n");
  CHECK_THROWS_AS(read_dataset(notab), ParseError);
}
