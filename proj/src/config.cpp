#include "qnpg/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <vector>

#include "qnpg/errors.hpp"

namespace qnpg {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_line(int line, const std::string& why) {
  throw SpecError("config line " + std::to_string(line) + ": " + why);
}

template <typename T>
T parse_number(const std::string& text, int line) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    bad_line(line, "cannot parse '" + text + "' as a number");
  }
  return value;
}

bool parse_bool(const std::string& text, int line) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  bad_line(line, "expected a boolean, got '" + text + "'");
}

Eigen::VectorXd parse_list(const std::string& text, int line) {
  std::vector<double> values;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    values.push_back(parse_number<double>(trim(text.substr(start, comma - start)), line));
    start = comma + 1;
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(),
                                     static_cast<Eigen::Index>(values.size()));
}

}  // namespace

LinearSolverKind parse_solver_kind(const std::string& text) {
  if (text == "auto") return LinearSolverKind::automatic;
  if (text == "dense") return LinearSolverKind::dense;
  if (text == "bicgstab") return LinearSolverKind::bicgstab;
  throw SpecError("unknown linear solver '" + text +
                  "' (expected auto, dense or bicgstab)");
}

void apply_config(std::istream& in, RunSettings& settings) {
  SolverConfig& c = settings.solver;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) {
      raw.erase(hash);
    }
    const std::string text = trim(raw);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) bad_line(line, "expected key = value");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (value.empty()) bad_line(line, "missing value for '" + key + "'");

    if (key == "reg") {
      Divergence::parse(value);
      settings.reg = value;
    } else if (key == "tau") {
      c.tau = parse_number<double>(value, line);
    } else if (key == "eta") {
      c.eta = parse_number<double>(value, line);
    } else if (key == "tol") {
      c.eps_tol = parse_number<double>(value, line);
    } else if (key == "max_iters") {
      c.max_iters = parse_number<int>(value, line);
    } else if (key == "bisect_tol") {
      c.bisect_tol = parse_number<double>(value, line);
    } else if (key == "solver") {
      c.linear.kind = parse_solver_kind(value);
    } else if (key == "linear_tol") {
      c.linear.tol = parse_number<double>(value, line);
    } else if (key == "linear_max_iters") {
      c.linear.max_iters = parse_number<int>(value, line);
    } else if (key == "dense_threshold") {
      c.linear.dense_threshold = parse_number<Eigen::Index>(value, line);
    } else if (key == "threads") {
      c.threads = parse_number<int>(value, line);
    } else if (key == "weight_e") {
      c.weight_e = parse_list(value, line);
    } else if (key == "snapshots") {
      c.record_snapshots = parse_bool(value, line);
    } else if (key == "timing") {
      c.record_timing = parse_bool(value, line);
    } else if (key == "beta") {
      settings.beta = parse_number<double>(value, line);
    } else if (key == "dt") {
      settings.flow.dt = parse_number<double>(value, line);
    } else if (key == "steps") {
      settings.flow.num_steps = parse_number<int>(value, line);
    } else if (key == "max_halvings") {
      settings.flow.max_halvings = parse_number<int>(value, line);
    } else {
      bad_line(line, "unknown key '" + key + "'");
    }
  }
}

void apply_config(const std::filesystem::path& path, RunSettings& settings) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open config '" + path.string() + "'");
  apply_config(in, settings);
}

}  // namespace qnpg
