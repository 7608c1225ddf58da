#include "jcmtomo/io.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace jcmtomo::io {

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

void write_counts_csv(std::ostream& os, const CountRecord& counts, const std::vector<std::string>& metadata) {
  for (const auto& line : metadata) os << "# " << line << '\n';
  const double total = counts.total();
  os << "m,a,count,frequency\n";
  for (const auto& e : counts.entries) {
    os << e.m << ',' << (e.a > 0 ? "1" : "-1") << ',' << format_double(e.value) << ','
       << format_double(total > 0.0 ? e.value / total : 0.0) << '\n';
  }
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(trim(s), &used);
    if (used != trim(s).size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InvalidArgument("cannot parse " + what + " value '" + s + "'");
  }
}

int to_int(const std::string& s, const std::string& what) {
  const double v = to_double(s, what);
  if (v != static_cast<int>(v)) throw InvalidArgument(what + " must be an integer, got '" + s + "'");
  return static_cast<int>(v);
}

}  // namespace

CountRecord read_counts_csv(std::istream& is) {
  std::string line;
  std::vector<std::string> header;
  while (std::getline(is, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    header = split(t, ',');
    break;
  }
  if (header.empty()) throw InvalidArgument("counts file has no header row");
  int im = -1, ia = -1, icount = -1, ifreq = -1;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    const std::string h = trim(header[static_cast<std::size_t>(i)]);
    if (h == "m") im = i;
    if (h == "a") ia = i;
    if (h == "count") icount = i;
    if (h == "frequency") ifreq = i;
  }
  if (im < 0 || ia < 0 || (icount < 0 && ifreq < 0))
    throw InvalidArgument("counts header must contain m, a and count or frequency columns");
  const int ival = icount >= 0 ? icount : ifreq;

  CountRecord rec;
  while (std::getline(is, line)) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto f = split(t, ',');
    if (static_cast<int>(f.size()) != static_cast<int>(header.size()))
      throw InvalidArgument("malformed counts row '" + t + "'");
    rec.entries.push_back({to_int(f[static_cast<std::size_t>(im)], "m"), to_int(f[static_cast<std::size_t>(ia)], "a"),
                           to_double(f[static_cast<std::size_t>(ival)], "count")});
  }
  rec.validate();
  rec.normalized = icount < 0;
  return rec;
}

CountRecord parse_outcome_list(const std::string& text) {
  CountRecord rec;
  for (const auto& item : split(text, ',')) {
    const std::string t = trim(item);
    if (t.empty()) continue;
    const auto f = split(t, ':');
    if (f.size() != 3) throw InvalidArgument("outcome '" + t + "' must look like m:a:value");
    rec.entries.push_back({to_int(f[0], "m"), to_int(f[1], "a"), to_double(f[2], "frequency")});
  }
  rec.validate();
  return rec;
}

void write_scan_csv(std::ostream& os, const DeterminantScan& scan, const std::vector<std::string>& metadata) {
  for (const auto& line : metadata) os << "# " << line << '\n';
  os << (scan.averaged ? "t0_us,D_bar\n" : "t_us,D\n");
  for (const auto& r : scan.rows) os << format_double(r.t) << ',' << format_double(r.value) << '\n';
}

nlohmann::json scan_to_json(const DeterminantScan& scan) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : scan.rows) rows.push_back({r.t, r.value});
  return {{"columns", scan.averaged ? nlohmann::json{"t0_us", "D_bar"} : nlohmann::json{"t_us", "D"}},
          {"averaged", scan.averaged},
          {"rows", rows},
          {"argmax", {{"t_us", scan.peak().t}, {"value", scan.peak().value}}}};
}

nlohmann::json matrix_to_json(const Eigen::Matrix3d& m) {
  nlohmann::json j = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) j.push_back({m(r, 0), m(r, 1), m(r, 2)});
  return j;
}

nlohmann::json bloch_to_json(const BlochVector& s) { return {s.x, s.y, s.z}; }

nlohmann::json design_to_json(const DesignSystem& d) {
  nlohmann::json j;
  j["m"] = matrix_to_json(d.m);
  j["b"] = {d.b(0), d.b(1), d.b(2)};
  j["det"] = d.det;
  j["m_inv"] = d.m_inv ? matrix_to_json(*d.m_inv) : nlohmann::json(nullptr);
  j["c"] = d.c ? matrix_to_json(*d.c) : nlohmann::json(nullptr);
  j["cond"] = d.cond;
  j["form"] = to_string(d.form);
  j["t_us"] = d.t;
  return j;
}

DesignSystem design_from_json(const nlohmann::json& j) {
  if (!j.contains("m") || !j.contains("b")) throw InvalidArgument("design document needs 'm' and 'b'");
  Eigen::Matrix3d m;
  Eigen::Vector3d b;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = j.at("m").at(static_cast<std::size_t>(r)).at(static_cast<std::size_t>(c)).get<double>();
    b(r) = j.at("b").at(static_cast<std::size_t>(r)).get<double>();
  }
  DesignSystem d = design_from_matrix(m, b);
  if (j.contains("form")) d.form = design_form_from_string(j.at("form").get<std::string>());
  if (j.contains("t_us")) d.t = j.at("t_us").get<double>();
  return d;
}

nlohmann::json ml_solution_to_json(const MlSolution& s) {
  nlohmann::json p = nlohmann::json::array();
  for (const auto& e : s.p.entries) p.push_back({{"m", e.m}, {"a", e.a}, {"p", e.value}});
  return {{"p", p},
          {"bloch", bloch_to_json(s.bloch)},
          {"delta", s.delta},
          {"constraint_active", s.constraint_active},
          {"converged", s.converged},
          {"iterations", s.iterations},
          {"log_likelihood", s.log_likelihood},
          {"constraint_value", s.constraint_value},
          {"multiplier", s.multiplier},
          {"regularizer", s.regularizer}};
}

}  // namespace jcmtomo::io
