#include "mtdg/io.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mtdg/errors.hpp"

namespace mtdg {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        // trim surrounding whitespace
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out << content;
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename to " + path.string() + " failed: " + ec.message());
}

EventSequence ingest_trades(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    std::string line;
    std::size_t line_no = 0;
    // skip comments before the header
    do {
        if (!std::getline(in, line)) throw ParseError("empty trade file " + path.string());
        ++line_no;
    } while (!line.empty() && line[0] == '#');

    const auto header = split_csv_line(line);
    int col_day = -1, col_seq = -1, col_side = -1, col_flag = -1, col_state = -1;
    for (int c = 0; c < static_cast<int>(header.size()); ++c) {
        if (header[static_cast<std::size_t>(c)] == "day") col_day = c;
        else if (header[static_cast<std::size_t>(c)] == "seq_no") col_seq = c;
        else if (header[static_cast<std::size_t>(c)] == "side") col_side = c;
        else if (header[static_cast<std::size_t>(c)] == "price_flag") col_flag = c;
        else if (header[static_cast<std::size_t>(c)] == "state") col_state = c;
    }
    const bool mapped = col_side >= 0 && col_flag >= 0;
    if (col_day < 0 || (!mapped && col_state < 0))
        throw ParseError(path.string() + ": header must name day,side,price_flag (or day,state)");

    EventSequence seq;
    seq.space = mapped ? StateSpace::signed_events() : StateSpace::plain(4);
    int max_state = 0;

    std::string prev_day;
    std::set<std::string> seen_days;
    long prev_seq_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto cells = split_csv_line(line);
        auto cell = [&](int c) -> const std::string& {
            if (c < 0 || c >= static_cast<int>(cells.size()))
                throw ParseError(path.string() + ":" + std::to_string(line_no) + ": missing column");
            return cells[static_cast<std::size_t>(c)];
        };

        const std::string& day = cell(col_day);
        if (day != prev_day) {
            if (!seen_days.insert(day).second)
                throw ParseError(path.string() + ":" + std::to_string(line_no) + ": day " + day +
                                 " reappears out of order");
            seq.day_offsets.push_back(seq.states.size());
            seq.day_labels.push_back(day);
            prev_day = day;
            prev_seq_no = 0;
        }
        if (col_seq >= 0) {
            long sn = 0;
            try {
                sn = std::stol(cell(col_seq));
            } catch (...) {
                throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad seq_no");
            }
            if (!seq.states.empty() && seq.day_offsets.back() != seq.states.size() && sn <= prev_seq_no)
                throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                 ": seq_no not increasing within day " + day);
            prev_seq_no = sn;
        }

        if (mapped) {
            const std::string& side = cell(col_side);
            int sign = 0;
            if (side == "1" || side == "+1") sign = 1;
            else if (side == "-1") sign = -1;
            else
                throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                 ": unknown side token '" + side + "'");
            const std::string& flag = cell(col_flag);
            PriceFlag pf;
            if (flag == "C") pf = PriceFlag::Change;
            else if (flag == "NC") pf = PriceFlag::NoChange;
            else
                throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                 ": unknown price_flag token '" + flag + "'");
            seq.states.push_back(static_cast<std::int32_t>(seq.space.state_of(sign, pf)));
        } else {
            int s = 0;
            try {
                s = std::stoi(cell(col_state));
            } catch (...) {
                throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad state");
            }
            if (s < 1)
                throw ParseError(path.string() + ":" + std::to_string(line_no) +
                                 ": state must be >= 1");
            max_state = std::max(max_state, s);
            seq.states.push_back(static_cast<std::int32_t>(s));
        }
    }
    if (seq.states.empty()) throw ParseError(path.string() + ": no trade rows");
    if (!mapped) seq.space = StateSpace::plain(std::max(max_state, 2));
    seq.check();
    return seq;
}

void export_trades(const EventSequence& seq, const std::filesystem::path& path) {
    seq.check();
    std::ostringstream out;
    const bool mapped = seq.space.has_event_map;
    out << (mapped ? "day,seq_no,side,price_flag\n" : "day,seq_no,state\n");
    for (std::size_t d = 0; d < seq.n_days(); ++d) {
        auto [first, last] = seq.day_span(d);
        const std::string day =
            d < seq.day_labels.size() ? seq.day_labels[d] : "day-" + std::to_string(d + 1);
        long sn = 1;
        for (std::size_t t = first; t < last; ++t, ++sn) {
            out << day << ',' << sn << ',';
            if (mapped) {
                const SignedEvent ev = seq.space.event(seq.states[t]);
                out << (ev.sign > 0 ? "+1" : "-1") << ',' << to_string(ev.flag) << '\n';
            } else {
                out << seq.states[t] << '\n';
            }
        }
    }
    atomic_write(path, out.str());
}

void save_model(const MtdgModel& model, const std::filesystem::path& path) {
    json doc;
    doc["schema"] = "mtdg-model";
    doc["version"] = kModelSchemaVersion;
    doc["m"] = model.m();
    doc["p"] = model.p();
    doc["labels"] = model.space().labels;
    doc["event_map"] = model.space().has_event_map;
    doc["representation"] =
        model.representation() == Representation::Mixture ? "mixture" : "deviation";
    doc["eta"] = std::vector<double>(model.eta().data(), model.eta().data() + model.m());
    doc["lambda"] = std::vector<double>(model.lambda().data(), model.lambda().data() + model.p());

    auto stack_json = [&](const std::vector<Eigen::MatrixXd>& stack) {
        json arr = json::array();
        for (const auto& mat : stack) {
            json rows = json::array();
            for (int i = 0; i < mat.rows(); ++i) {
                json row = json::array();
                for (int j = 0; j < mat.cols(); ++j) row.push_back(mat(i, j));
                rows.push_back(std::move(row));
            }
            arr.push_back(std::move(rows));
        }
        return arr;
    };
    if (model.representation() == Representation::Mixture)
        doc["q_stack"] = stack_json(model.q_stack());
    else
        doc["a_stack"] = stack_json(model.a_stack().a);

    atomic_write(path, doc.dump(2) + "\n");
}

MtdgModel load_model(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw ParseError("cannot parse model document " + path.string() + ": " + e.what());
    }
    try {
        if (doc.at("schema").get<std::string>() != "mtdg-model")
            throw ParseError(path.string() + " is not a model document");
        if (doc.at("version").get<int>() != kModelSchemaVersion)
            throw ParseError(path.string() + ": unsupported schema version " +
                             std::to_string(doc.at("version").get<int>()));
        const int m = doc.at("m").get<int>();
        const int p = doc.at("p").get<int>();
        StateSpace space;
        space.m = m;
        space.labels = doc.at("labels").get<std::vector<std::string>>();
        space.has_event_map = doc.at("event_map").get<bool>();

        auto vec = [&](const char* key) {
            const auto v = doc.at(key).get<std::vector<double>>();
            return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))
                .eval();
        };
        const Eigen::VectorXd eta = vec("eta");
        const Eigen::VectorXd lambda = vec("lambda");
        if (eta.size() != m || lambda.size() != p)
            throw ParseError(path.string() + ": eta/lambda sizes disagree with m/p");

        auto stack_from = [&](const char* key) {
            std::vector<Eigen::MatrixXd> stack;
            for (const auto& mat_json : doc.at(key)) {
                Eigen::MatrixXd mat(m, m);
                int i = 0;
                for (const auto& row : mat_json) {
                    int j = 0;
                    for (const auto& x : row) mat(i, j++) = x.get<double>();
                    if (j != m) throw ParseError(path.string() + ": ragged matrix row");
                    ++i;
                }
                if (i != m) throw ParseError(path.string() + ": ragged matrix");
                stack.push_back(std::move(mat));
            }
            if (static_cast<int>(stack.size()) != p)
                throw ParseError(path.string() + ": stack size disagrees with p");
            return stack;
        };

        const std::string rep = doc.at("representation").get<std::string>();
        if (rep == "mixture")
            return MtdgModel::from_mixture(space, lambda, stack_from("q_stack"), eta);
        if (rep == "deviation") {
            DeviationStack a;
            a.a = stack_from("a_stack");
            return MtdgModel::from_deviation(space, eta, std::move(a), lambda);
        }
        throw ParseError(path.string() + ": unknown representation '" + rep + "'");
    } catch (const json::exception& e) {
        throw ParseError("malformed model document " + path.string() + ": " + e.what());
    }
}

Config Config::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path.string());
    return from_string(read_file(path));
}

Config Config::from_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        line = line.substr(b, e - b + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + " is not key=value");
        auto trim = [](std::string s) {
            const auto bb = s.find_first_not_of(" \t");
            const auto ee = s.find_last_not_of(" \t");
            return bb == std::string::npos ? std::string() : s.substr(bb, ee - bb + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        cfg.values_[key] = value;
    }
    return cfg;
}

bool Config::has(const std::string& key) const { return values_.count(key) > 0; }

std::string Config::get_str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
}

std::string Config::get_str(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

long Config::get_int(const std::string& key) const {
    try {
        return std::stol(get_str(key));
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        throw ConfigError("config key '" + key + "' is not an integer");
    }
}

long Config::get_int(const std::string& key, long fallback) const {
    return has(key) ? get_int(key) : fallback;
}

double Config::get_double(const std::string& key) const {
    try {
        return std::stod(get_str(key));
    } catch (const ConfigError&) {
        throw;
    } catch (...) {
        throw ConfigError("config key '" + key + "' is not a number");
    }
}

double Config::get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string v = get_str(key);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("config key '" + key + "' is not a boolean");
}

std::string Table::to_csv() const {
    std::ostringstream out;
    for (const auto& m : meta) out << "# " << m << '\n';
    for (std::size_t c = 0; c < columns.size(); ++c) out << (c ? "," : "") << columns[c];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
        out << '\n';
    }
    return out.str();
}

void Table::write(const std::filesystem::path& path) const { atomic_write(path, to_csv()); }

}  // namespace mtdg
