#include "step/oracle/game_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace step::oracle {
namespace {

struct Token {
  std::string text;
  std::size_t line;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t line = 1;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (c == '\n') {
      ++line;
      ++i;
    } else if (c == '#') {
      while (i < text.size() && text[i] != '\n') ++i;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else {
      const std::size_t start = i;
      while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != '#') ++i;
      out.push_back({std::string(text.substr(start, i - start)), line});
    }
  }
  return out;
}

double to_number(const Token& t) {
  double v = 0.0;
  const char* end = t.text.data() + t.text.size();
  auto [ptr, ec] = std::from_chars(t.text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw GameError("line " + std::to_string(t.line) + ": '" + t.text + "' is not a finite number");
  }
  return v;
}

std::size_t to_count(const Token& t) {
  const double v = to_number(t);
  if (v < 1 || v != std::floor(v)) {
    throw GameError("line " + std::to_string(t.line) + ": '" + t.text + "' is not a positive integer");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

MatrixGame parse_game(std::string_view text) {
  const std::vector<Token> tokens = tokenize(text);
  if (tokens.empty()) throw GameError("game file is empty");
  std::size_t pos = 0;
  const std::size_t n = to_count(tokens[pos++]);
  if (tokens.size() < 1 + n) throw GameError("header declares " + std::to_string(n) + " agents but is truncated");
  std::vector<std::size_t> counts(n);
  std::size_t joint = 1;
  for (auto& k : counts) {
    k = to_count(tokens[pos++]);
    if (joint > kMaxJointActions / k) throw GameError("joint-action space exceeds the enumeration cap");
    joint *= k;
  }
  const std::size_t expected = n * joint;
  if (tokens.size() - pos != expected) {
    throw GameError("expected " + std::to_string(expected) + " payoff values after the header, found " +
                    std::to_string(tokens.size() - pos));
  }
  std::vector<std::vector<double>> payoffs(n, std::vector<double>(joint));
  for (auto& tensor : payoffs)
    for (double& v : tensor) v = to_number(tokens[pos++]);
  return MatrixGame(std::move(counts), std::move(payoffs));
}

MatrixGame load_game(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GameError("cannot open game file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_game(buffer.str());
}

std::string format_game(const MatrixGame& game) {
  std::ostringstream out;
  out.precision(17);
  out << game.num_agents();
  for (std::size_t k : game.action_counts()) out << ' ' << k;
  out << '\n';
  const std::size_t last = game.action_counts().back();
  for (std::size_t agent = 0; agent < game.num_agents(); ++agent) {
    out << "# agent " << agent + 1 << '\n';
    const auto& tensor = game.payoff_tensor(agent);
    for (std::size_t i = 0; i < tensor.size(); ++i) out << tensor[i] << ((i + 1) % last == 0 ? '\n' : ' ');
  }
  return out.str();
}

}  // namespace step::oracle
