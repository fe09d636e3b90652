#include "sspnp/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sspnp/errors.hpp"

namespace sspnp::cli {

namespace {

struct Entry {
  std::string value;
  int line = 0;
};

struct Row {
  std::vector<std::string> cells;
  int line = 0;
};

struct Section {
  int line = 0;
  std::map<std::string, Entry> keys;
  std::vector<Row> rows;
};

const std::set<std::string> kKeyedSections = {"system", "command", "solver", "output"};
const std::set<std::string> kTableSections = {"species", "fixed_charge"};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

class Parser {
 public:
  Parser(std::string source, Command command) : source_(std::move(source)), command_(command) {}

  [[noreturn]] void fail(int line, const std::string& message) const {
    const std::string where = line > 0 ? source_ + ":" + std::to_string(line) : source_;
    throw ConfigError(where + ": " + message);
  }

  void read(std::istream& in) {
    std::string raw;
    std::string current;
    int line = 0;
    while (std::getline(in, raw)) {
      ++line;
      const auto hash = raw.find('#');
      const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
      if (text.empty()) continue;
      if (text.front() == '[') {
        if (text.back() != ']') fail(line, "unterminated section header");
        current = trim(text.substr(1, text.size() - 2));
        if (!kKeyedSections.contains(current) && !kTableSections.contains(current)) {
          fail(line, "unknown section [" + current + "]");
        }
        if (sections_.contains(current)) fail(line, "section [" + current + "] appears twice");
        sections_[current].line = line;
        continue;
      }
      if (current.empty()) fail(line, "entry outside of any section");
      Section& sec = sections_[current];
      if (kTableSections.contains(current)) {
        sec.rows.push_back(Row{split_ws(text), line});
        continue;
      }
      const auto eq = text.find('=');
      if (eq == std::string::npos) fail(line, "expected 'key = value' in [" + current + "]");
      const std::string key = trim(text.substr(0, eq));
      const std::string value = trim(text.substr(eq + 1));
      if (key.empty()) fail(line, "missing key before '='");
      if (value.empty()) fail(line, "missing value for '" + key + "'");
      if (sec.keys.contains(key)) fail(line, "'" + key + "' given twice in [" + current + "]");
      sec.keys[key] = Entry{value, line};
    }
  }

  ExperimentConfig build() {
    ExperimentConfig cfg;
    cfg.command = command_;
    read_system(cfg);
    read_command(cfg);
    read_solver(cfg);
    read_output(cfg);
    for (const auto& [name, sec] : sections_) {
      for (const auto& [key, entry] : sec.keys) {
        if (!used_.contains(name + "." + key)) fail(entry.line, "unknown key '" + key + "' in [" + name + "]");
      }
    }
    return cfg;
  }

 private:
  const Section* section(const std::string& name) const {
    const auto it = sections_.find(name);
    return it == sections_.end() ? nullptr : &it->second;
  }

  const Entry* entry(const std::string& sec, const std::string& key) {
    used_.insert(sec + "." + key);
    const Section* s = section(sec);
    if (!s) return nullptr;
    const auto it = s->keys.find(key);
    return it == s->keys.end() ? nullptr : &it->second;
  }

  double to_double(const std::string& text, int line, const std::string& what) const {
    double v = 0.0;
    const auto* begin = text.data() + (text.starts_with('+') ? 1 : 0);
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) fail(line, what + ": '" + text + "' is not a finite number");
    return v;
  }

  long to_integer(const std::string& text, int line, const std::string& what) const {
    long v = 0;
    const auto* begin = text.data() + (text.starts_with('+') ? 1 : 0);
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end) fail(line, what + ": '" + text + "' is not an integer");
    return v;
  }

  std::optional<double> number(const std::string& sec, const std::string& key) {
    const Entry* e = entry(sec, key);
    if (!e) return std::nullopt;
    return to_double(e->value, e->line, key);
  }

  double required_number(const std::string& sec, const std::string& key) {
    const auto v = number(sec, key);
    if (!v) fail(section_line(sec), "[" + sec + "] needs '" + key + "'");
    return *v;
  }

  std::optional<std::string> word(const std::string& sec, const std::string& key) {
    const Entry* e = entry(sec, key);
    if (!e) return std::nullopt;
    return e->value;
  }

  std::vector<double> number_list(const std::string& sec, const std::string& key) {
    const Entry* e = entry(sec, key);
    if (!e) fail(section_line(sec), "[" + sec + "] needs '" + key + "'");
    std::vector<double> out;
    for (const auto& tok : split_ws(e->value)) out.push_back(to_double(tok, e->line, key));
    if (out.empty()) fail(e->line, key + " is empty");
    return out;
  }

  bool flag(const std::string& sec, const std::string& key, bool fallback) {
    const Entry* e = entry(sec, key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "yes" || e->value == "1") return true;
    if (e->value == "false" || e->value == "no" || e->value == "0") return false;
    fail(e->line, key + ": expected true or false");
  }

  int section_line(const std::string& sec) const {
    const Section* s = section(sec);
    return s ? s->line : 0;
  }

  void read_system(ExperimentConfig& cfg) {
    if (!section("system")) fail(0, "missing [system] section");
    auto& sys = cfg.system;
    sys.kappa = required_number("system", "kappa");
    sys.profile.sigma = number("system", "sigma").value_or(1.0);
    cfg.temperature = number("system", "temperature").value_or(300.0);
    if (!(cfg.temperature > 0.0)) fail(entry("system", "temperature")->line, "temperature must be positive");

    const Section* species = section("species");
    if (!species) fail(0, "missing [species] section");
    for (const Row& row : species->rows) {
      if (row.cells.size() != 3) fail(row.line, "species row needs 3 columns: z c_left c_right");
      const long z = to_integer(row.cells[0], row.line, "valence");
      sys.species.push_back(model::Species{static_cast<int>(z), to_double(row.cells[1], row.line, "c_left"),
                                          to_double(row.cells[2], row.line, "c_right")});
    }
    const Section* charge = section("fixed_charge");
    if (!charge) fail(0, "missing [fixed_charge] section");
    for (const Row& row : charge->rows) {
      if (row.cells.size() != 2) fail(row.line, "fixed_charge row needs 2 columns: length plateau");
      sys.profile.lengths.push_back(to_double(row.cells[0], row.line, "length"));
      sys.profile.plateaus.push_back(to_double(row.cells[1], row.line, "plateau"));
    }

    try {
      sys.profile.validate();
    } catch (const Error& e) {
      fail(charge->line, std::string("[fixed_charge] ") + e.what());
    }
    try {
      sys.validate();
    } catch (const Error& e) {
      fail(species->line, std::string("[species] ") + e.what());
    }
  }

  std::size_t species_index(const std::string& text, int line) const {
    const long i = to_integer(text, line, "pair");
    if (i < 1 || i > static_cast<long>(species_count_)) {
      fail(line, "pair: species index " + text + " outside 1.." + std::to_string(species_count_));
    }
    return static_cast<std::size_t>(i - 1);
  }

  std::pair<std::size_t, std::size_t> pair(const ExperimentConfig& cfg) {
    species_count_ = cfg.system.species_count();
    const Entry* e = entry("command", "pair");
    if (!e) return {0, 1};
    const auto cells = split_ws(e->value);
    if (cells.size() != 2) fail(e->line, "pair needs two species indices");
    const auto first = species_index(cells[0], e->line);
    const auto second = species_index(cells[1], e->line);
    if (first == second) fail(e->line, "pair must name two different species");
    if (cfg.system.species[first].valence * cfg.system.species[second].valence >= 0) {
      fail(e->line, "pair must name species of opposite valence");
    }
    return {first, second};
  }

  void read_command(ExperimentConfig& cfg) {
    if (!section("command")) fail(0, "missing [command] section");
    if (const Entry* e = entry("command", "name"); e && e->value != command_name(command_)) {
      fail(e->line, "config is for '" + e->value + "' but was run as '" + command_name(command_) + "'");
    }
    switch (command_) {
      case Command::Solve:
        read_solve(cfg);
        break;
      case Command::Sweep:
        read_sweep(cfg);
        break;
      case Command::Trace:
      case Command::TurningPoints:
        read_trace(cfg);
        break;
      case Command::PhaseDiagram:
        read_trace(cfg);
        cfg.sigmas = number_list("command", "sigmas");
        cfg.kappas = number_list("command", "kappas");
        for (double k : cfg.kappas) {
          if (!(k > 0.0)) fail(entry("command", "kappas")->line, "kappas must be positive");
        }
        for (double s : cfg.sigmas) {
          if (!(s >= 0.0)) fail(entry("command", "sigmas")->line, "sigmas must be non-negative");
        }
        break;
    }
  }

  void read_solve(ExperimentConfig& cfg) {
    const auto name = word("command", "formulation");
    if (!name) fail(section_line("command"), "[command] needs 'formulation' (V2I, I2V, C2I or I2C)");
    const auto [first, second] = pair(cfg);
    if (*name == "V2I") {
      cfg.formulation = model::VoltageToCurrent{required_number("command", "voltage")};
    } else if (*name == "I2V") {
      cfg.formulation = model::CurrentToVoltage{required_number("command", "current")};
    } else if (*name == "C2I") {
      cfg.formulation = model::ConcentrationToCurrent{required_number("command", "voltage"),
                                                      required_number("command", "c_b"), first, second};
    } else if (*name == "I2C") {
      cfg.formulation = model::CurrentToConcentration{required_number("command", "voltage"),
                                                      required_number("command", "current"), first, second};
    } else {
      fail(entry("command", "formulation")->line, "unknown formulation '" + *name + "'");
    }
  }

  void read_sweep(ExperimentConfig& cfg) {
    auto& s = cfg.sweep;
    const auto parameter = word("command", "parameter").value_or("voltage");
    if (parameter == "voltage") {
      s.parameter = continuation::SweepParameter::Voltage;
    } else if (parameter == "concentration") {
      s.parameter = continuation::SweepParameter::Concentration;
      s.voltage = required_number("command", "voltage");
    } else {
      fail(entry("command", "parameter")->line, "parameter must be voltage or concentration");
    }
    std::tie(s.first, s.second) = pair(cfg);
    s.start = required_number("command", "start");
    s.end = required_number("command", "end");
    if (s.start == s.end) fail(entry("command", "end")->line, "start and end must differ");
    if (s.parameter == continuation::SweepParameter::Concentration && !(std::min(s.start, s.end) > 0.0)) {
      fail(entry("command", "start")->line, "concentration sweep range must be positive");
    }
    const auto dirs = word("command", "directions").value_or("both");
    if (dirs != "both" && dirs != "forward") fail(entry("command", "directions")->line, "directions must be both or forward");
    cfg.both_directions = dirs == "both";
  }

  void read_trace(ExperimentConfig& cfg) {
    auto& t = cfg.trace;
    const auto family = word("command", "family").value_or("I2V");
    if (family == "I2V") {
      t.family = continuation::TraceFamily::CurrentToVoltage;
    } else if (family == "I2C") {
      t.family = continuation::TraceFamily::CurrentToConcentration;
      t.voltage = required_number("command", "voltage");
      t.start_concentration = required_number("command", "start_concentration");
    } else {
      fail(entry("command", "family")->line, "family must be I2V or I2C");
    }
    std::tie(t.first, t.second) = pair(cfg);
    t.current_min = required_number("command", "current_min");
    t.current_max = required_number("command", "current_max");
    if (!(t.current_max > t.current_min)) fail(entry("command", "current_max")->line, "current_max must exceed current_min");
    t.start_voltage = number("command", "start_voltage").value_or(0.0);
    t.response_min = number("command", "response_min").value_or(t.response_min);
    t.response_max = number("command", "response_max").value_or(t.response_max);
    t.max_response_step = number("command", "max_response_step").value_or(t.max_response_step);
    t.max_response_relative = number("command", "max_response_relative").value_or(t.max_response_relative);
  }

  void read_solver(ExperimentConfig& cfg) {
    auto& s = cfg.solver;
    s.abs_tol = number("solver", "abs_tol").value_or(s.abs_tol);
    s.rel_tol = number("solver", "rel_tol").value_or(s.rel_tol);
    if (const Entry* e = entry("solver", "max_mesh_points")) {
      const long n = to_integer(e->value, e->line, "max_mesh_points");
      if (n < 3) fail(e->line, "max_mesh_points must be at least 3");
      s.max_mesh_points = static_cast<std::size_t>(n);
    }
    if (const Entry* e = entry("solver", "max_newton_iters")) {
      s.max_newton_iters = static_cast<int>(to_integer(e->value, e->line, "max_newton_iters"));
    }
    try {
      s.validate();
    } catch (const Error& e) {
      fail(section_line("solver"), e.what());
    }
    cfg.steps.initial_step = number("solver", "initial_step");
    cfg.steps.min_step = number("solver", "min_step");
    cfg.steps.max_step = number("solver", "max_step");
    cfg.steps.growth = number("solver", "growth");
  }

  void read_output(ExperimentConfig& cfg) {
    cfg.prefix = word("output", "prefix").value_or(cfg.prefix);
    if (cfg.prefix.find('/') != std::string::npos) fail(entry("output", "prefix")->line, "prefix must be a file name");
    if (const auto dir = word("output", "directory")) cfg.directory = *dir;
    cfg.svg = flag("output", "svg", false);
  }

  std::string source_;
  Command command_;
  std::map<std::string, Section> sections_;
  std::set<std::string> used_;
  std::size_t species_count_ = 0;
};

}  // namespace

std::string command_name(Command command) {
  switch (command) {
    case Command::Solve:
      return "solve";
    case Command::Sweep:
      return "sweep";
    case Command::Trace:
      return "trace";
    case Command::TurningPoints:
      return "turning-points";
    case Command::PhaseDiagram:
      return "phase-diagram";
  }
  return "unknown";
}

continuation::StepSettings StepOverrides::apply(continuation::StepSettings base) const {
  if (initial_step) base.initial_step = *initial_step;
  if (min_step) base.min_step = *min_step;
  if (max_step) base.max_step = *max_step;
  if (growth) base.growth = *growth;
  try {
    base.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("[solver] ") + e.what());
  }
  return base;
}

ExperimentConfig parse_config(std::istream& in, const std::string& source, Command command) {
  Parser parser(source, command);
  parser.read(in);
  return parser.build();
}

ExperimentConfig load_config(const std::filesystem::path& path, Command command) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  return parse_config(in, path.string(), command);
}

}  // namespace sspnp::cli
