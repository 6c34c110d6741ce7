#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "step/oracle/matrix_game.hpp"

namespace step::oracle {

// Game file format: whitespace-separated numbers, `#` starts a comment that
// runs to end of line. First the header `n k1 ... kn`, then n payoff tensors
// (agent 1 first), each with prod(k) entries in row-major order.

MatrixGame parse_game(std::string_view text);
MatrixGame load_game(const std::filesystem::path& path);
std::string format_game(const MatrixGame& game);

}  // namespace step::oracle
