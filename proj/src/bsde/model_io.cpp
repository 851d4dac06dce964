#include "kolmo/bsde/model_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "kolmo/util/errors.hpp"
#include "kolmo/util/files.hpp"

namespace kolmo::bsde {
namespace {

std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_double(const std::string& token) {
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (end == token.c_str() || *end != '\0') throw ContractError("malformed number '" + token + "' in model file");
  return v;
}

std::string expect_key(std::istream& in, const std::string& key) {
  std::string k;
  std::string v;
  if (!(in >> k >> v) || k != key) throw ContractError("model file: expected '" + key + "'");
  return v;
}

void write_net(std::ostream& out, const Mlp& net) {
  out << "net " << net.name() << ' ' << net.widths().size();
  for (int w : net.widths()) out << ' ' << w;
  const std::vector<double> flat = net.flat_params();
  out << '\n' << flat.size();
  for (double v : flat) out << ' ' << hex(v);
  out << '\n';
}

Mlp read_net(std::istream& in) {
  std::string tag;
  std::string name;
  std::size_t n_widths = 0;
  if (!(in >> tag >> name >> n_widths) || tag != "net") throw ContractError("model file: expected 'net'");
  std::vector<int> widths(n_widths);
  for (int& w : widths) {
    if (!(in >> w)) throw ContractError("model file: truncated width list");
  }
  std::size_t count = 0;
  if (!(in >> count)) throw ContractError("model file: missing parameter count");
  std::vector<double> flat(count);
  std::string token;
  for (double& v : flat) {
    if (!(in >> token)) throw ContractError("model file: truncated parameters of " + name);
    v = parse_double(token);
  }
  return Mlp::from_params(widths, flat, name);
}

std::vector<Mlp> read_family(std::istream& in, const std::string& key) {
  const int count = std::stoi(expect_key(in, key));
  std::vector<Mlp> nets;
  for (int i = 0; i < count; ++i) nets.push_back(read_net(in));
  return nets;
}

}  // namespace

std::string serialize_model(const DeepBsdeModel& model) {
  std::ostringstream out;
  const ModelSpec& s = model.spec();
  out << "kolmo-model " << kModelFormatVersion << '\n'
      << "scheme " << sde::scheme_name(s.scheme) << '\n'
      << "milstein_mode " << milstein_mode_name(s.milstein_mode) << '\n'
      << "dim " << s.dim << '\n'
      << "horizon " << hex(s.grid.horizon()) << '\n'
      << "steps " << s.grid.steps() << '\n'
      << "input_shift " << hex(s.input_shift) << '\n'
      << "input_scale " << hex(s.input_scale) << '\n';
  write_net(out, model.net_g0());
  write_net(out, model.net_grad0());
  out << "step_nets " << model.step_nets().size() << '\n';
  for (const Mlp& net : model.step_nets()) write_net(out, net);
  out << "milstein_nets " << model.milstein_nets().size() << '\n';
  for (const Mlp& net : model.milstein_nets()) write_net(out, net);
  out << "lm_nets " << model.lm_nets().size() << '\n';
  for (const Mlp& net : model.lm_nets()) write_net(out, net);
  return out.str();
}

DeepBsdeModel deserialize_model(const std::string& text) {
  std::istringstream in(text);
  const std::string version = expect_key(in, "kolmo-model");
  if (version != std::to_string(kModelFormatVersion)) {
    throw ContractError("unsupported model format version " + version);
  }
  ModelSpec spec;
  spec.scheme = sde::parse_scheme(expect_key(in, "scheme"));
  spec.milstein_mode = parse_milstein_mode(expect_key(in, "milstein_mode"));
  spec.dim = std::stoi(expect_key(in, "dim"));
  const double horizon = parse_double(expect_key(in, "horizon"));
  const int steps = std::stoi(expect_key(in, "steps"));
  spec.grid = TimeGrid(horizon, steps);
  spec.input_shift = parse_double(expect_key(in, "input_shift"));
  spec.input_scale = parse_double(expect_key(in, "input_scale"));
  Mlp g0 = read_net(in);
  Mlp grad0 = read_net(in);
  std::vector<Mlp> step_nets = read_family(in, "step_nets");
  std::vector<Mlp> milstein_nets = read_family(in, "milstein_nets");
  std::vector<Mlp> lm_nets = read_family(in, "lm_nets");
  return DeepBsdeModel::assemble(spec, std::move(g0), std::move(grad0), std::move(step_nets),
                                 std::move(milstein_nets), std::move(lm_nets));
}

void save_model(const DeepBsdeModel& model, const std::filesystem::path& path) {
  util::write_file_atomic(path, serialize_model(model));
}

DeepBsdeModel load_model(const std::filesystem::path& path) { return deserialize_model(util::read_file(path)); }

std::string serialize_mlp(const Mlp& net) {
  std::ostringstream out;
  out << "kolmo-net " << kModelFormatVersion << '\n';
  write_net(out, net);
  return out.str();
}

Mlp deserialize_mlp(const std::string& text) {
  std::istringstream in(text);
  const std::string version = expect_key(in, "kolmo-net");
  if (version != std::to_string(kModelFormatVersion)) {
    throw ContractError("unsupported network format version " + version);
  }
  return read_net(in);
}

}  // namespace kolmo::bsde
