#include <fstream>
#include <sstream>
#include <stdexcept>

#include "perclim/format.hpp"
#include "perclim/harness.hpp"

namespace perclim {

std::string Cell::rendered() const {
  switch (kind) {
    case Kind::number:
      return format_double(num);
    case Kind::integer:
      return format_i64(ival);
    case Kind::text:
      return text;
  }
  return {};
}

bool Report::passed() const {
  for (const Check& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

EmitFormat emit_format_from_name(const std::string& name) {
  if (name == "csv") return EmitFormat::csv;
  if (name == "json") return EmitFormat::json;
  if (name == "plotdata") return EmitFormat::plotdata;
  throw std::invalid_argument("unknown format: " + name + " (csv|json|plotdata)");
}

namespace {

std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::string render_csv(const Report& r) {
  std::ostringstream os;
  os << "# experiment," << r.experiment << "\n";
  os << "# base_seed," << format_u64(r.base_seed) << "\n";
  for (const auto& [key, value] : r.meta) os << "# " << key << "," << value << "\n";
  for (std::size_t i = 0; i < r.columns.size(); ++i) {
    if (i) os << ",";
    os << r.columns[i];
  }
  os << "\n";
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ",";
      os << row[i].rendered();
    }
    os << "\n";
  }
  os << "# checks\n";
  os << "check,measured,oracle,tolerance,seeds,pass,note\n";
  for (const Check& c : r.checks) {
    os << c.name << "," << format_double(c.measured) << "," << format_double(c.oracle) << ","
       << format_double(c.tolerance) << "," << c.seeds << "," << (c.pass ? "pass" : "FAIL")
       << "," << c.note << "\n";
  }
  return os.str();
}

std::string render_json(const Report& r) {
  std::ostringstream os;
  os << "{\"experiment\":\"" << json_escape(r.experiment) << "\",\"base_seed\":"
     << format_u64(r.base_seed) << ",\"columns\":[";
  for (std::size_t i = 0; i < r.columns.size(); ++i) {
    if (i) os << ",";
    os << "\"" << json_escape(r.columns[i]) << "\"";
  }
  os << "],\"rows\":[";
  for (std::size_t ri = 0; ri < r.rows.size(); ++ri) {
    if (ri) os << ",";
    os << "[";
    for (std::size_t i = 0; i < r.rows[ri].size(); ++i) {
      if (i) os << ",";
      const Cell& cell = r.rows[ri][i];
      if (cell.kind == Cell::Kind::text) {
        os << "\"" << json_escape(cell.text) << "\"";
      } else {
        os << cell.rendered();
      }
    }
    os << "]";
  }
  os << "],\"checks\":[";
  for (std::size_t i = 0; i < r.checks.size(); ++i) {
    if (i) os << ",";
    const Check& c = r.checks[i];
    os << "{\"name\":\"" << json_escape(c.name) << "\",\"measured\":" << format_double(c.measured)
       << ",\"oracle\":" << format_double(c.oracle)
       << ",\"tolerance\":" << format_double(c.tolerance) << ",\"seeds\":" << c.seeds
       << ",\"pass\":" << (c.pass ? "true" : "false") << ",\"note\":\"" << json_escape(c.note)
       << "\"}";
  }
  os << "],\"meta\":{";
  for (std::size_t i = 0; i < r.meta.size(); ++i) {
    if (i) os << ",";
    os << "\"" << json_escape(r.meta[i].first) << "\":\"" << json_escape(r.meta[i].second)
       << "\"";
  }
  os << "},\"passed\":" << (r.passed() ? "true" : "false") << "}";
  return os.str();
}

std::string render_plotdata(const Report& r) {
  std::ostringstream os;
  os << "# experiment " << r.experiment << " seed " << format_u64(r.base_seed) << "\n";
  os << "#";
  for (const std::string& col : r.columns) os << " " << col;
  os << "\n";
  for (const auto& row : r.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << " ";
      os << row[i].rendered();
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace

std::string render(const Report& report, EmitFormat format) {
  switch (format) {
    case EmitFormat::csv:
      return render_csv(report);
    case EmitFormat::json:
      return render_json(report);
    case EmitFormat::plotdata:
      return render_plotdata(report);
  }
  throw std::logic_error("render: unreachable");
}

void emit(const Report& report, const std::string& path, EmitFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << render(report, format);
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace perclim
