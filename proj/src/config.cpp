#include "heis/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace heis {

std::string to_string(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::Validate: return "validate";
        case ExperimentKind::Tube: return "tube";
        case ExperimentKind::OmRatio: return "om-ratio";
        case ExperimentKind::Conditional: return "conditional";
        case ExperimentKind::Geodesic: return "geodesic";
        case ExperimentKind::Equivalence: return "equivalence";
    }
    return "?";
}

namespace {

struct Value {
    enum Type { Number, String, Array, Bool } type = Number;
    double num = 0.0;
    std::string str;
    std::vector<double> arr;
    bool b = false;
    bool used = false;
};

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

// strips a trailing comment that is not inside quotes
std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '"') quoted = !quoted;
        if (c == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

double parse_number(const std::string& s, const std::string& where) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trail");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: bad number '" + s + "' at " + where);
    }
}

Value parse_value(const std::string& raw, const std::string& where) {
    Value v;
    std::string s = trim(raw);
    if (s.empty()) throw ConfigError("config: empty value at " + where);
    if (s.front() == '"') {
        if (s.size() < 2 || s.back() != '"')
            throw ConfigError("config: unterminated string at " + where);
        v.type = Value::String;
        v.str = s.substr(1, s.size() - 2);
        return v;
    }
    if (s.front() == '[') {
        if (s.back() != ']') throw ConfigError("config: unterminated array at " + where);
        v.type = Value::Array;
        std::string body = s.substr(1, s.size() - 2);
        std::stringstream ss(body);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;
            v.arr.push_back(parse_number(item, where));
        }
        return v;
    }
    if (s == "true" || s == "false") {
        v.type = Value::Bool;
        v.b = (s == "true");
        return v;
    }
    v.type = Value::Number;
    v.num = parse_number(s, where);
    return v;
}

using KvMap = std::map<std::string, Value>;

KvMap tokenize(const std::string& text) {
    KvMap kv;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = trim(strip_comment(line));
        if (s.empty()) continue;
        std::string where = "line " + std::to_string(lineno);
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("config: bad section at " + where);
            section = trim(s.substr(1, s.size() - 2));
            if (section.empty()) throw ConfigError("config: empty section at " + where);
            continue;
        }
        std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key = value at " + where);
        std::string key = trim(s.substr(0, eq));
        if (key.empty()) throw ConfigError("config: empty key at " + where);
        if (section.empty())
            throw ConfigError("config: key '" + key + "' outside any section at " + where);
        std::string full = section + "." + key;
        if (kv.count(full)) throw ConfigError("config: duplicate key '" + full + "'");
        kv.emplace(full, parse_value(s.substr(eq + 1), where));
    }
    return kv;
}

class Extractor {
  public:
    explicit Extractor(KvMap& kv) : kv_(kv) {}

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    double number(const std::string& key, double fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        it->second.used = true;
        if (it->second.type != Value::Number)
            throw ConfigError("config: '" + key + "' must be a number");
        return it->second.num;
    }

    std::string str(const std::string& key, const std::string& fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        it->second.used = true;
        if (it->second.type != Value::String)
            throw ConfigError("config: '" + key + "' must be a quoted string");
        return it->second.str;
    }

    bool boolean(const std::string& key, bool fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        it->second.used = true;
        if (it->second.type != Value::Bool)
            throw ConfigError("config: '" + key + "' must be true or false");
        return it->second.b;
    }

    std::vector<double> array(const std::string& key, std::vector<double> fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        it->second.used = true;
        if (it->second.type != Value::Array)
            throw ConfigError("config: '" + key + "' must be an array");
        return it->second.arr;
    }

    std::int64_t integer(const std::string& key, std::int64_t fallback) {
        double v = number(key, static_cast<double>(fallback));
        double r = std::round(v);
        if (std::fabs(v - r) > 1e-9)
            throw ConfigError("config: '" + key + "' must be an integer");
        return static_cast<std::int64_t>(r);
    }

    void reject_unused() const {
        for (const auto& [k, v] : kv_)
            if (!v.used) throw ConfigError("config: unknown key '" + k + "'");
    }

  private:
    KvMap& kv_;
};

ExperimentKind parse_kind(const std::string& s) {
    if (s == "validate") return ExperimentKind::Validate;
    if (s == "tube") return ExperimentKind::Tube;
    if (s == "om-ratio") return ExperimentKind::OmRatio;
    if (s == "conditional") return ExperimentKind::Conditional;
    if (s == "geodesic") return ExperimentKind::Geodesic;
    if (s == "equivalence") return ExperimentKind::Equivalence;
    throw ConfigError("config: unknown experiment kind '" + s + "'");
}

void require_positive(double v, const std::string& key) {
    if (!(v > 0.0)) throw ConfigError("config: '" + key + "' must be > 0");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    KvMap kv = tokenize(text);
    Extractor ex(kv);
    ExperimentConfig c;
    c.raw = text;

    if (!ex.has("experiment.kind"))
        throw ConfigError("config: missing experiment.kind");
    c.kind = parse_kind(ex.str("experiment.kind", ""));

    double seed = ex.number("experiment.seed", 0.0);
    if (seed < 0.0) throw ConfigError("config: 'experiment.seed' must be >= 0");
    c.seed = static_cast<std::uint64_t>(seed);

    c.n_steps = static_cast<int>(ex.integer("experiment.n_steps", 1024));
    if (c.n_steps < 1) throw ConfigError("config: 'experiment.n_steps' must be >= 1");
    c.n_samples = ex.integer("experiment.n_samples", 100000);
    if (c.n_samples < 1) throw ConfigError("config: 'experiment.n_samples' must be >= 1");
    c.epsilons = ex.array("experiment.epsilons", {});
    for (double e : c.epsilons) require_positive(e, "experiment.epsilons");
    c.workers = static_cast<int>(ex.integer("experiment.workers", 0));
    if (c.workers < 0) throw ConfigError("config: 'experiment.workers' must be >= 0");
    c.output_dir = ex.str("experiment.output_dir", "");

    c.phi = ex.str("curves.phi", "constant");
    c.psi = ex.str("curves.psi", "constant");
    c.gamma = ex.str("curves.gamma", "constant");

    c.tube_epsilon = ex.number("tube.epsilon", 0.5);
    require_positive(c.tube_epsilon, "tube.epsilon");
    c.tube_method = ex.str("tube.method", "importance");
    if (c.tube_method != "naive" && c.tube_method != "importance")
        throw ConfigError("config: 'tube.method' must be \"naive\" or \"importance\"");
    c.tube_dump = ex.boolean("tube.dump_path", false);

    c.validate_level = ex.str("validate.level", "fast");
    if (c.validate_level != "fast" && c.validate_level != "full")
        throw ConfigError("config: 'validate.level' must be \"fast\" or \"full\"");

    auto target = ex.array("geodesic.target", {0.0, 0.0, 0.0});
    if (target.size() != 3)
        throw ConfigError("config: 'geodesic.target' must have 3 components");
    c.target = {target[0], target[1], target[2]};
    c.geo_grid = static_cast<int>(ex.integer("geodesic.grid_steps", 256));
    if (c.geo_grid < 1) throw ConfigError("config: 'geodesic.grid_steps' must be >= 1");
    c.multistarts = static_cast<int>(ex.integer("geodesic.multistarts", 8));
    if (c.multistarts < 1) throw ConfigError("config: 'geodesic.multistarts' must be >= 1");
    c.mu0 = ex.number("geodesic.mu0", 100.0);
    require_positive(c.mu0, "geodesic.mu0");
    c.mu_stages = static_cast<int>(ex.integer("geodesic.mu_stages", 4));
    if (c.mu_stages < 1) throw ConfigError("config: 'geodesic.mu_stages' must be >= 1");
    c.max_iters = static_cast<int>(ex.integer("geodesic.max_iters", 600));
    if (c.max_iters < 1) throw ConfigError("config: 'geodesic.max_iters' must be >= 1");
    c.geo_tolerance = ex.number("geodesic.tolerance", 1e-3);
    require_positive(c.geo_tolerance, "geodesic.tolerance");

    c.eq_points = static_cast<int>(ex.integer("equivalence.n_points", 200));
    if (c.eq_points < 1) throw ConfigError("config: 'equivalence.n_points' must be >= 1");
    c.eq_box = ex.number("equivalence.box", 2.0);
    require_positive(c.eq_box, "equivalence.box");

    ex.reject_unused();

    if ((c.kind == ExperimentKind::OmRatio || c.kind == ExperimentKind::Conditional) &&
        c.epsilons.empty())
        throw ConfigError("config: '" + to_string(c.kind) +
                          "' needs a non-empty experiment.epsilons ladder");
    return c;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

HorizontalControl parse_curve_spec(const std::string& spec, TimeGrid grid) {
    std::istringstream ss(trim(spec));
    std::string head;
    ss >> head;
    if (head == "constant") {
        std::string rest;
        if (ss >> rest) throw ConfigError("curve: 'constant' takes no arguments");
        return constant_control(grid);
    }
    if (head == "line") {
        double a, b;
        if (!(ss >> a >> b)) throw ConfigError("curve: 'line' needs two numbers");
        std::string rest;
        if (ss >> rest) throw ConfigError("curve: 'line' takes two numbers");
        return line_control(grid, a, b);
    }
    if (head == "circle") {
        double r;
        if (!(ss >> r)) throw ConfigError("curve: 'circle' needs a radius");
        std::string rest;
        if (ss >> rest) throw ConfigError("curve: 'circle' takes one number");
        if (!(r > 0.0)) throw ConfigError("curve: circle radius must be > 0");
        return circle_control(grid, r);
    }
    if (head == "csv") {
        std::string file;
        if (!(ss >> file)) throw ConfigError("curve: 'csv' needs a file path");
        HorizontalControl c = read_control_csv(file);
        if (c.grid != grid)
            throw ConfigError("curve: control file grid (" +
                              std::to_string(c.grid.n_steps) +
                              " steps) does not match experiment n_steps");
        return c;
    }
    throw ConfigError("curve: unknown spec '" + spec + "'");
}

}  // namespace heis
