#include "step/policy/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "step/core/errors.hpp"
#include "step/policy/independent.hpp"
#include "step/policy/nlevel.hpp"

namespace step::policy {

namespace {

constexpr const char* kMagic = "step-checkpoint";
constexpr int kVersion = 1;

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& token, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size()) {
    throw CheckpointError("checkpoint: bad number '" + token + "' in " + what);
  }
  return v;
}

std::size_t parse_size(const std::string& token, const std::string& what) {
  char* end = nullptr;
  const unsigned long long v = std::strtoull(token.c_str(), &end, 10);
  if (token.empty() || token[0] == '-' || end != token.c_str() + token.size()) {
    throw CheckpointError("checkpoint: bad count '" + token + "' in " + what);
  }
  return static_cast<std::size_t>(v);
}

std::string expect_line(std::istream& in, const std::string& what) {
  std::string line;
  if (!std::getline(in, line)) throw CheckpointError("checkpoint: truncated before " + what);
  return line;
}

void check_params(const Checkpoint& cp) {
  try {
    if (cp.kind == "step") {
      NLevelPolicy(cp.arch).check(cp.params);
    } else if (cp.kind == "ippo" || cp.kind == "central-critic") {
      IndependentPolicies(cp.arch).check(cp.params);
    } else {
      throw CheckpointError("checkpoint: unknown policy kind '" + cp.kind + "'");
    }
  } catch (const core::ContractError& e) {
    throw CheckpointError(std::string("checkpoint does not match its architecture: ") + e.what());
  }
}

}  // namespace

std::string format_checkpoint(const Checkpoint& cp) {
  check_params(cp);
  const PolicyArch& a = cp.arch;
  std::ostringstream os;
  os << kMagic << ' ' << kVersion << '\n';
  os << "kind " << cp.kind << '\n';
  os << "arch " << a.obs_size << ' ' << a.num_agents << ' ' << a.max_agents << ' '
     << (a.discrete() ? "discrete" : "box") << ' ' << a.action.size << ' ' << number(a.action.low) << ' '
     << number(a.action.high) << ' ' << a.embed_dim << ' ' << a.state_hidden << ' ' << a.hyper_hidden << ' '
     << a.target_hidden << ' ' << number(a.hyper_init_scale) << '\n';
  os << "tensors " << cp.params.size() << '\n';
  for (const auto& [name, t] : cp.params) {
    os << "tensor " << name << ' ' << t.rank();
    for (std::size_t d : t.shape()) os << ' ' << d;
    os << '\n';
    bool first = true;
    for (double v : t.values()) {
      if (!first) os << ' ';
      os << number(v);
      first = false;
    }
    os << '\n';
  }
  os << "end\n";
  return os.str();
}

Checkpoint parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  Checkpoint cp;
  {
    std::istringstream h(expect_line(in, "header"));
    std::string magic;
    int version = 0;
    if (!(h >> magic >> version) || magic != kMagic) throw CheckpointError("checkpoint: missing header");
    if (version != kVersion) throw CheckpointError("checkpoint: unsupported version " + std::to_string(version));
  }
  {
    std::istringstream k(expect_line(in, "kind"));
    std::string key;
    if (!(k >> key >> cp.kind) || key != "kind") throw CheckpointError("checkpoint: missing kind line");
  }
  {
    std::istringstream a(expect_line(in, "arch"));
    std::vector<std::string> f;
    for (std::string tok; a >> tok;) f.push_back(tok);
    if (f.size() != 13 || f[0] != "arch") throw CheckpointError("checkpoint: malformed arch line");
    PolicyArch& arch = cp.arch;
    arch.obs_size = parse_size(f[1], "arch");
    arch.num_agents = parse_size(f[2], "arch");
    arch.max_agents = parse_size(f[3], "arch");
    const std::size_t size = parse_size(f[5], "arch");
    if (f[4] == "discrete") {
      arch.action = env::ActionSpace::discrete(size);
    } else if (f[4] == "box") {
      arch.action = env::ActionSpace::box(size, parse_double(f[6], "arch"), parse_double(f[7], "arch"));
    } else {
      throw CheckpointError("checkpoint: unknown action kind '" + f[4] + "'");
    }
    arch.embed_dim = parse_size(f[8], "arch");
    arch.state_hidden = parse_size(f[9], "arch");
    arch.hyper_hidden = parse_size(f[10], "arch");
    arch.target_hidden = parse_size(f[11], "arch");
    arch.hyper_init_scale = parse_double(f[12], "arch");
    try {
      arch.validate();
    } catch (const core::ContractError& e) {
      throw CheckpointError(std::string("checkpoint: ") + e.what());
    }
  }
  std::size_t count = 0;
  {
    std::istringstream c(expect_line(in, "tensor count"));
    std::string key, n;
    if (!(c >> key >> n) || key != "tensors") throw CheckpointError("checkpoint: missing tensor count");
    count = parse_size(n, "tensor count");
  }
  for (std::size_t t = 0; t < count; ++t) {
    std::istringstream h(expect_line(in, "tensor header"));
    std::string key, name, rank_tok;
    if (!(h >> key >> name >> rank_tok) || key != "tensor") throw CheckpointError("checkpoint: malformed tensor header");
    core::Shape shape(parse_size(rank_tok, name));
    for (std::size_t& d : shape) {
      std::string tok;
      if (!(h >> tok)) throw CheckpointError("checkpoint: tensor '" + name + "' shape truncated");
      d = parse_size(tok, name);
    }
    std::istringstream body(expect_line(in, "values of " + name));
    std::vector<double> values;
    for (std::string tok; body >> tok;) values.push_back(parse_double(tok, name));
    if (values.size() != core::shape_size(shape)) {
      throw CheckpointError("checkpoint: tensor '" + name + "' has " + std::to_string(values.size()) +
                            " values, shape needs " + std::to_string(core::shape_size(shape)));
    }
    try {
      cp.params.set(name, core::Tensor(shape, std::move(values)));
    } catch (const std::exception& e) {
      throw CheckpointError("checkpoint: tensor '" + name + "': " + e.what());
    }
  }
  if (expect_line(in, "end marker") != "end") throw CheckpointError("checkpoint: missing end marker");
  check_params(cp);
  return cp;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  const std::string text = format_checkpoint(checkpoint);
  std::ofstream out(path);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  out << text;
  if (!out) throw CheckpointError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

std::unique_ptr<JointPolicy> make_joint_policy(const Checkpoint& checkpoint) {
  check_params(checkpoint);
  if (checkpoint.kind == "step") {
    return std::make_unique<MaterializedPolicy>(NLevelPolicy(checkpoint.arch), checkpoint.params);
  }
  return std::make_unique<IndependentJointPolicy>(IndependentPolicies(checkpoint.arch), checkpoint.params);
}

}  // namespace step::policy
