#include "cascade/config.hpp"

#include "cascade/errors.hpp"
#include "cascade/numeric.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cascade {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

double to_double(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigInvalid("config: bad numeric value for '" + key + "': " + s);
    }
}

long to_long(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long v = std::stol(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigInvalid("config: bad integer value for '" + key + "': " + s);
    }
}

std::uint64_t to_u64(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigInvalid("config: bad unsigned value for '" + key + "': " + s);
    }
}

bool to_bool(const std::string& s, const std::string& key) {
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigInvalid("config: bad boolean value for '" + key + "': " + s);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : text) {
        if (c == ',') {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!trim(cur).empty() || !parts.empty()) parts.push_back(trim(cur));
    parts.erase(std::remove_if(parts.begin(), parts.end(),
                               [](const std::string& s) { return s.empty(); }),
                parts.end());
    return parts;
}

} // namespace

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    for (const std::string& p : split_list(text)) out.push_back(to_double(p, "list"));
    return out;
}

std::vector<long> parse_long_list(const std::string& text) {
    std::vector<long> out;
    for (const std::string& p : split_list(text)) out.push_back(to_long(p, "list"));
    return out;
}

ExperimentConfig ExperimentConfig::parse(std::string_view text) {
    ExperimentConfig cfg;
    std::string section;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigInvalid("config line " + std::to_string(line_no) + ": bad section");
            section = trim(t.substr(1, t.size() - 2));
            if (section != "model" && section != "experiment" && section != "run")
                throw ConfigInvalid("config: unknown section [" + section + "]");
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigInvalid("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (section == "model") {
            if (key == "kind") cfg.model.kind = value;
            else if (key == "atoms") cfg.model.atoms = value;
            else if (key == "count") cfg.model.count = value;
            else if (key == "normalize") cfg.model.normalize = to_bool(value, key);
            else if (key == "mean") cfg.model.mean = to_double(value, key);
            else if (key == "variance") cfg.model.variance = to_double(value, key);
            else throw ConfigInvalid("config: unknown key '" + key + "' in [model]");
        } else if (section == "experiment") {
            auto& e = cfg.experiment;
            if (key == "kind") e.kind = value;
            else if (key == "depth") e.depth = to_long(value, key);
            else if (key == "replicas") e.replicas = to_long(value, key);
            else if (key == "side_depth") e.side_depth = to_long(value, key);
            else if (key == "tail_window") e.tail_window = to_long(value, key);
            else if (key == "n0") e.n0 = to_long(value, key);
            else if (key == "horizon") e.horizon = to_long(value, key);
            else if (key == "budget") e.budget = to_long(value, key);
            else if (key == "alpha") e.alpha = to_double(value, key);
            else if (key == "u_max") e.u_max = to_double(value, key);
            else if (key == "grid") e.grid = to_double(value, key);
            else if (key == "x") e.x = to_double(value, key);
            else if (key == "delta") e.delta = to_double(value, key);
            else if (key == "betas") e.betas = value;
            else if (key == "ns") e.ns = value;
            else if (key == "method") e.method = value;
            else if (key == "psi") e.psi = value;
            else if (key == "cap") e.cap = to_u64(value, key);
            else if (key == "side_cap") e.side_cap = to_u64(value, key);
            else if (key == "retain_trees") e.retain_trees = to_bool(value, key);
            else if (key == "plot_stride") e.plot_stride = to_long(value, key);
            else throw ConfigInvalid("config: unknown key '" + key + "' in [experiment]");
        } else if (section == "run") {
            if (key == "seed") cfg.run.seed = to_u64(value, key);
            else if (key == "workers") cfg.run.workers = static_cast<int>(to_long(value, key));
            else if (key == "out") cfg.run.out = value;
            else throw ConfigInvalid("config: unknown key '" + key + "' in [run]");
        } else {
            throw ConfigInvalid("config: key outside any section at line " + std::to_string(line_no));
        }
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigInvalid("config: cannot open " + path);
    std::ostringstream os;
    os << is.rdbuf();
    return parse(os.str());
}

std::string ExperimentConfig::serialize() const {
    std::ostringstream os;
    os << "[model]\n";
    os << "kind = " << model.kind << "\n";
    if (model.atoms) os << "atoms = " << *model.atoms << "\n";
    if (model.count) os << "count = " << *model.count << "\n";
    if (model.normalize) os << "normalize = " << (*model.normalize ? "true" : "false") << "\n";
    if (model.mean) os << "mean = " << fmt_double(*model.mean) << "\n";
    if (model.variance) os << "variance = " << fmt_double(*model.variance) << "\n";
    os << "[experiment]\n";
    const auto& e = experiment;
    os << "kind = " << e.kind << "\n";
    if (e.depth) os << "depth = " << *e.depth << "\n";
    if (e.replicas) os << "replicas = " << *e.replicas << "\n";
    if (e.side_depth) os << "side_depth = " << *e.side_depth << "\n";
    if (e.tail_window) os << "tail_window = " << *e.tail_window << "\n";
    if (e.n0) os << "n0 = " << *e.n0 << "\n";
    if (e.horizon) os << "horizon = " << *e.horizon << "\n";
    if (e.budget) os << "budget = " << *e.budget << "\n";
    if (e.alpha) os << "alpha = " << fmt_double(*e.alpha) << "\n";
    if (e.u_max) os << "u_max = " << fmt_double(*e.u_max) << "\n";
    if (e.grid) os << "grid = " << fmt_double(*e.grid) << "\n";
    if (e.x) os << "x = " << fmt_double(*e.x) << "\n";
    if (e.delta) os << "delta = " << fmt_double(*e.delta) << "\n";
    if (e.betas) os << "betas = " << *e.betas << "\n";
    if (e.ns) os << "ns = " << *e.ns << "\n";
    if (e.method) os << "method = " << *e.method << "\n";
    if (e.psi) os << "psi = " << *e.psi << "\n";
    if (e.cap) os << "cap = " << *e.cap << "\n";
    if (e.side_cap) os << "side_cap = " << *e.side_cap << "\n";
    if (e.retain_trees) os << "retain_trees = " << (*e.retain_trees ? "true" : "false") << "\n";
    if (e.plot_stride) os << "plot_stride = " << *e.plot_stride << "\n";
    os << "[run]\n";
    os << "seed = " << run.seed << "\n";
    os << "workers = " << run.workers << "\n";
    os << "out = " << run.out << "\n";
    return os.str();
}

std::uint64_t ExperimentConfig::config_hash() const { return num::fnv1a64(serialize()); }

OffspringLaw ExperimentConfig::build_law() const {
    if (model.kind == "lattice") return lattice_boundary_model();
    if (model.kind == "gaussian") return gaussian_boundary_model();
    if (model.kind == "gaussian-template") {
        OffspringLaw law = make_gaussian_law(model.mean.value_or(0.0), model.variance.value_or(1.0),
                                             /*as_template=*/true);
        if (model.normalize.value_or(true)) law = normalize_to_boundary(law, 1e-9);
        return law;
    }
    if (model.kind == "atoms") {
        if (!model.atoms) throw ConfigInvalid("config: kind=atoms needs an 'atoms' list");
        std::vector<Atom> atoms;
        for (const std::string& part : split_list(*model.atoms)) {
            const std::size_t colon = part.find(':');
            if (colon == std::string::npos)
                throw ConfigInvalid("config: atom entries must be value:prob");
            atoms.push_back({to_double(trim(part.substr(0, colon)), "atom value"),
                             to_double(trim(part.substr(colon + 1)), "atom prob")});
        }
        std::vector<double> counts;
        const std::string count_text = model.count.value_or("2");
        if (count_text.find(':') == std::string::npos) {
            const long k = to_long(count_text, "count");
            if (k < 0 || k > 64) throw ConfigInvalid("config: count out of range");
            counts.assign(static_cast<std::size_t>(k) + 1, 0.0);
            counts.back() = 1.0;
        } else {
            for (const std::string& part : split_list(count_text)) {
                const std::size_t colon = part.find(':');
                const long k = to_long(trim(part.substr(0, colon)), "count value");
                const double p = to_double(trim(part.substr(colon + 1)), "count prob");
                if (k < 0 || k > 64) throw ConfigInvalid("config: count out of range");
                if (counts.size() <= static_cast<std::size_t>(k))
                    counts.resize(static_cast<std::size_t>(k) + 1, 0.0);
                counts[static_cast<std::size_t>(k)] = p;
            }
        }
        OffspringLaw law = make_finite_atom_law(std::move(counts), std::move(atoms),
                                                /*as_template=*/true);
        if (model.normalize.value_or(false)) law = normalize_to_boundary(law, 1e-9);
        return law;
    }
    throw ConfigInvalid("config: unknown model kind '" + model.kind + "'");
}

void ExperimentConfig::validate() const {
    static const char* kinds[] = {"model-diagnose", "grow",       "tree-martingales",
                                  "renewal",        "conditioned-walk", "spine",
                                  "spine-envelope", "phase-scan", "verify"};
    bool ok = false;
    for (const char* k : kinds) ok = ok || experiment.kind == k;
    if (!ok) throw ConfigInvalid("config: unknown experiment kind '" + experiment.kind + "'");
    if (model.kind != "lattice" && model.kind != "gaussian" && model.kind != "atoms" &&
        model.kind != "gaussian-template")
        throw ConfigInvalid("config: unknown model kind '" + model.kind + "'");
    if (experiment.depth && *experiment.depth < 0) throw ConfigInvalid("config: negative depth");
    if (experiment.replicas && *experiment.replicas < 1)
        throw ConfigInvalid("config: replicas must be positive");
    if (experiment.alpha && *experiment.alpha < 0.0)
        throw ConfigInvalid("config: alpha must be nonnegative");
    if (run.workers < 0) throw ConfigInvalid("config: workers must be nonnegative");
}

} // namespace cascade
