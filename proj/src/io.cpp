#include "stabpade/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "stabpade/errors.hpp"
#include "stabpade/serialize.hpp"

namespace stabpade {

std::string to_string(ImportFormat format) { return format == ImportFormat::csv ? "csv" : "json"; }

ImportFormat import_format_from_string(const std::string& name) {
  if (name == "csv") return ImportFormat::csv;
  if (name == "json") return ImportFormat::json;
  throw ValidationError("format", "unknown format '" + name + "' (csv or json)");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_double(const std::string& s, int line, const std::string& field) {
  double x = 0.0;
  const char* first = s.data();
  if (!s.empty() && s[0] == '+') ++first;
  const auto r = std::from_chars(first, s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty())
    throw ParseError(line, field, "'" + s + "' is not a number");
  if (!std::isfinite(x)) throw ParseError(line, field, "non-finite value");
  return x;
}

int parse_int(const std::string& s, int line, const std::string& field) {
  int x = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty())
    throw ParseError(line, field, "'" + s + "' is not an integer");
  return x;
}

struct Row {
  int line;
  double alpha;
  int root;
  double energy;
};

// Joins each alpha's sorted energies to the previous alpha by nearest energy,
// greedily over the closest pairs first.
std::vector<std::vector<double>> nearest_energy_curves(const std::vector<std::vector<double>>& levels) {
  const std::size_t K = levels.front().size();
  std::vector<std::vector<double>> curves(K, std::vector<double>(levels.size()));
  std::vector<double> last = levels.front();
  for (std::size_t c = 0; c < K; ++c) curves[c][0] = last[c];
  for (std::size_t k = 1; k < levels.size(); ++k) {
    std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
    for (std::size_t c = 0; c < K; ++c)
      for (std::size_t r = 0; r < K; ++r) pairs.emplace_back(std::abs(levels[k][r] - last[c]), c, r);
    std::sort(pairs.begin(), pairs.end());
    std::vector<bool> cu(K, false), ru(K, false);
    for (const auto& [d, c, r] : pairs) {
      if (cu[c] || ru[r]) continue;
      cu[c] = ru[r] = true;
      curves[c][k] = levels[k][r];
    }
    for (std::size_t c = 0; c < K; ++c) last[c] = curves[c][k];
  }
  return curves;
}

}  // namespace

StabilizationData read_stabilization_csv(std::istream& in) {
  StabilizationData data;
  data.source = DataSource::imported;
  std::string raw;
  int line_no = 0;
  int alpha_col = -1, root_col = -1, energy_col = -1;
  std::size_t columns = 0;
  std::vector<Row> rows;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string body = trim(std::string_view(line).substr(1));
      const auto colon = body.find(':');
      if (colon == std::string::npos) {
        if (!body.empty()) data.metadata["comment." + std::to_string(line_no)] = body;
      } else {
        data.metadata[trim(std::string_view(body).substr(0, colon))] = trim(std::string_view(body).substr(colon + 1));
      }
      continue;
    }
    const auto cells = split(line);
    if (alpha_col < 0) {
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (cells[c] == "alpha") alpha_col = static_cast<int>(c);
        else if (cells[c] == "root") root_col = static_cast<int>(c);
        else if (cells[c] == "energy") energy_col = static_cast<int>(c);
        else throw ParseError(line_no, cells[c], "unknown column (expected alpha, root, energy)");
      }
      if (alpha_col < 0 || energy_col < 0) throw ParseError(line_no, "header", "needs alpha and energy columns");
      columns = cells.size();
      continue;
    }
    if (cells.size() != columns)
      throw ParseError(line_no, "row", std::to_string(cells.size()) + " fields, header has " + std::to_string(columns));
    Row r{line_no, parse_double(cells[alpha_col], line_no, "alpha"), -1, parse_double(cells[energy_col], line_no, "energy")};
    if (root_col >= 0) {
      r.root = parse_int(cells[root_col], line_no, "root");
      if (r.root < 0) throw ParseError(line_no, "root", "must be >= 0");
    }
    rows.push_back(r);
  }
  if (alpha_col < 0) throw ParseError(line_no, "header", "no header line 'alpha,root,energy'");
  if (rows.empty()) throw ParseError(line_no, "row", "no data rows");

  // Group contiguous rows by alpha.
  std::vector<std::vector<const Row*>> groups;
  for (const Row& r : rows) {
    if (groups.empty() || r.alpha != groups.back().front()->alpha) {
      if (!groups.empty() && !(r.alpha > groups.back().front()->alpha))
        throw ValidationError("alpha_grid", "line " + std::to_string(r.line) +
                                                ": alpha values must increase (rows of one alpha contiguous)");
      data.alpha_grid.push_back(r.alpha);
      groups.emplace_back();
    }
    groups.back().push_back(&r);
  }
  const std::size_t K = groups.front().size();
  for (const auto& g : groups)
    if (g.size() != K)
      throw ParseError(g.front()->line, "root", "alpha = " + format_double(g.front()->alpha) + " has " +
                                                    std::to_string(g.size()) + " roots, expected " + std::to_string(K));

  if (root_col >= 0) {
    data.curves.assign(K, std::vector<double>(groups.size()));
    for (std::size_t k = 0; k < groups.size(); ++k) {
      std::vector<bool> seen(K, false);
      for (const Row* r : groups[k]) {
        if (r->root >= static_cast<int>(K)) throw ParseError(r->line, "root", "root index exceeds root count");
        if (seen[r->root]) throw ParseError(r->line, "root", "duplicate root at this alpha");
        seen[r->root] = true;
        data.curves[r->root][k] = r->energy;
      }
    }
    data.tracking = TrackingMethod::imported;
  } else {
    std::vector<std::vector<double>> levels(groups.size());
    for (std::size_t k = 0; k < groups.size(); ++k) {
      for (const Row* r : groups[k]) levels[k].push_back(r->energy);
      std::sort(levels[k].begin(), levels[k].end());
    }
    data.curves = nearest_energy_curves(levels);
    data.tracking = TrackingMethod::nearest_energy;
  }
  data.tracking_quality.assign(data.alpha_grid.size() - 1, 1.0);
  data.validate(2);
  return data;
}

void write_stabilization_csv(std::ostream& out, const StabilizationData& data) {
  for (const auto& [key, value] : data.metadata) out << "# " << key << ": " << value << "\n";
  out << "alpha,root,energy\n";
  for (std::size_t k = 0; k < data.alpha_grid.size(); ++k)
    for (std::size_t c = 0; c < data.curves.size(); ++c)
      out << format_double(data.alpha_grid[k]) << ',' << c << ',' << format_double(data.curves[c][k]) << '\n';
}

StabilizationData read_stabilization_json(std::istream& in) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(0, "json", e.what());
  }
  if (!j.contains("tracking_quality")) {
    const std::size_t n = j.contains("alpha_grid") && j["alpha_grid"].is_array() ? j["alpha_grid"].size() : 1;
    j["tracking_quality"] = std::vector<double>(n > 0 ? n - 1 : 0, 1.0);
  }
  if (!j.contains("source")) j["source"] = "imported";
  if (!j.contains("tracking")) j["tracking"] = "imported";
  StabilizationData data = j.get<StabilizationData>();
  data.source = DataSource::imported;
  data.validate(2);
  return data;
}

void write_stabilization_json(std::ostream& out, const StabilizationData& data) { out << json(data).dump(1) << "\n"; }

StabilizationData import_stabilization(const std::string& path, ImportFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("path", "cannot open '" + path + "'");
  return format == ImportFormat::csv ? read_stabilization_csv(in) : read_stabilization_json(in);
}

void export_stabilization(const std::string& path, const StabilizationData& data, ImportFormat format) {
  std::ostringstream os;
  if (format == ImportFormat::csv) write_stabilization_csv(os, data);
  else write_stabilization_json(os, data);
  write_file(path, os.str());
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  out << "theta,alpha,re_e,im_e,pade_error\n";
  for (std::size_t k = 0; k < t.grid.size(); ++k) {
    const cplx eta = t.eta_at(k);
    out << format_double(std::arg(eta)) << ',' << format_double(std::abs(eta)) << ','
        << format_double(t.energies[k].real()) << ',' << format_double(t.energies[k].imag()) << ','
        << format_double(t.pade_errors[k]) << '\n';
  }
}

void write_landscape_csv(std::ostream& out, const DerivativeLandscape& l) {
  out << "alpha,theta,d_theta,d_alpha\n";
  for (std::size_t i = 0; i < l.alpha_grid.size(); ++i)
    for (std::size_t j = 0; j < l.theta_grid.size(); ++j)
      out << format_double(l.alpha_grid[i]) << ',' << format_double(l.theta_grid[j]) << ','
          << format_double(l.d_theta[i][j]) << ',' << format_double(l.d_alpha[i][j]) << '\n';
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string content_id(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("path", "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::string& path, const std::string& contents) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("path", "cannot write '" + path + "'");
    out << contents;
    if (!out.flush()) throw ValidationError("path", "write failed for '" + path + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace stabpade
