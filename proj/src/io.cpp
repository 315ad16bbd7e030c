#include "warpmix/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "warpmix/inference.hpp"

namespace warpmix {

namespace {

constexpr int kModelSchemaVersion = 1;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, int row, const std::string& col) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && *begin == ' ') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc{} || ptr != end)
    throw DataError("row " + std::to_string(row) + ", column '" + col + "': cannot parse '" +
                    s + "' as a number");
  if (!std::isfinite(v))
    throw DataError("row " + std::to_string(row) + ", column '" + col + "': non-finite value");
  return v;
}

long parse_long(const std::string& s, int row, const std::string& col) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw DataError("row " + std::to_string(row) + ", column '" + col + "': cannot parse '" +
                    s + "' as an integer");
  return v;
}

}  // namespace

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + tmp + "'");
    out << content;
    if (!out) throw IoError("write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw IoError("cannot rename '" + tmp + "' to '" + path + "'");
  }
}

std::string file_digest_hex(const std::string& path) {
  const std::string bytes = read_file(path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CurveSet load_curves_csv(const std::string& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw DataError("'" + path + "': empty file");

  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "curve_id" || header[1] != "step")
    throw DataError("'" + path + "': header must start with curve_id,step,d0,...");
  const int dims = static_cast<int>(header.size()) - 2;
  for (int d = 0; d < dims; ++d)
    if (header[2 + d] != "d" + std::to_string(d))
      throw DataError("'" + path + "': missing column d" + std::to_string(d));

  // Rows grouped by id in order of first appearance.
  std::vector<std::string> ids;
  std::map<std::string, std::vector<std::pair<long, Eigen::VectorXd>>> rows;
  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != dims + 2)
      throw DataError("row " + std::to_string(row_no) + ": expected " +
                      std::to_string(dims + 2) + " fields, got " +
                      std::to_string(fields.size()));
    const std::string& id = fields[0];
    const long step = parse_long(fields[1], row_no, "step");
    if (step < 0) throw DataError("row " + std::to_string(row_no) + ": negative step");
    Eigen::VectorXd value(dims);
    for (int d = 0; d < dims; ++d)
      value(d) = parse_double(fields[2 + d], row_no, "d" + std::to_string(d));
    if (rows.find(id) == rows.end()) ids.push_back(id);
    rows[id].emplace_back(step, std::move(value));
  }
  if (ids.empty()) throw DataError("'" + path + "': no data rows");

  CurveSet data;
  for (const auto& id : ids) {
    auto& entries = rows[id];
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    Curve curve;
    curve.id = id;
    curve.points.resize(entries.size(), dims);
    for (size_t j = 0; j < entries.size(); ++j) {
      if (entries[j].first != static_cast<long>(j)) {
        if (j > 0 && entries[j].first == entries[j - 1].first)
          throw DataError("curve '" + id + "': duplicate step " +
                          std::to_string(entries[j].first));
        throw DataError("curve '" + id + "': gap at step " + std::to_string(j));
      }
      curve.points.row(j) = entries[j].second.transpose();
    }
    data.curves.push_back(std::move(curve));
  }
  return data;
}

void save_curves_csv(const CurveSet& data, const std::string& path) {
  std::ostringstream out;
  const int dims = static_cast<int>(data.dims());
  out << "curve_id,step";
  for (int d = 0; d < dims; ++d) out << ",d" << d;
  out << "\n";
  for (const auto& curve : data.curves)
    for (Eigen::Index j = 0; j < curve.length(); ++j) {
      out << curve.id << "," << j;
      for (int d = 0; d < dims; ++d) out << "," << format_double(curve.points(j, d));
      out << "\n";
    }
  write_text_atomic(path, out.str());
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.empty()) throw IoError("model file: expected a non-empty matrix");
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(j.at(0).size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j.at(r).size()) != cols)
      throw IoError("model file: ragged matrix rows");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
  }
  return m;
}

}  // namespace

void save_model(const WarpMixtureModel& model, const std::string& path) {
  nlohmann::json doc;
  doc["schema_version"] = kModelSchemaVersion;
  doc["clusters"] = model.components();
  doc["dims"] = model.dims();
  doc["grid_len"] = model.grid_len();
  doc["max_shift"] = model.max_shift();
  doc["max_skip"] = model.max_skip();
  doc["allow_stay"] = model.allow_stay;
  doc["tie_transitions"] = model.tie_transitions;
  doc["offsets_enabled"] = model.offsets_enabled;
  doc["weights"] = std::vector<double>(model.weights.begin(), model.weights.end());
  doc["init_dist"] = matrix_to_json(model.init_dist);
  nlohmann::json steps = nlohmann::json::array(), means = nlohmann::json::array(),
                 vars = nlohmann::json::array();
  for (int k = 0; k < model.components(); ++k) {
    steps.push_back(matrix_to_json(model.step_dist[k]));
    means.push_back(matrix_to_json(model.means[k]));
    vars.push_back(matrix_to_json(model.vars[k]));
  }
  doc["step_dist"] = std::move(steps);
  doc["means"] = std::move(means);
  doc["variances"] = std::move(vars);
  write_text_atomic(path, doc.dump(2) + "\n");
}

WarpMixtureModel load_model(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path + "': " + e.what());
  }
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kModelSchemaVersion)
      throw IoError("'" + path + "': unsupported schema version " + std::to_string(version));

    WarpMixtureModel m;
    m.allow_stay = doc.at("allow_stay").get<bool>();
    m.tie_transitions = doc.at("tie_transitions").get<bool>();
    m.offsets_enabled = doc.at("offsets_enabled").get<bool>();
    const auto weights = doc.at("weights").get<std::vector<double>>();
    m.weights = Eigen::Map<const Eigen::VectorXd>(weights.data(), weights.size());
    m.init_dist = matrix_from_json(doc.at("init_dist"));
    const int k_count = doc.at("clusters").get<int>();
    for (int k = 0; k < k_count; ++k) {
      m.step_dist.push_back(matrix_from_json(doc.at("step_dist").at(k)));
      m.means.push_back(matrix_from_json(doc.at("means").at(k)));
      m.vars.push_back(matrix_from_json(doc.at("variances").at(k)));
    }
    if (m.components() != k_count || m.dims() != doc.at("dims").get<int>() ||
        m.grid_len() != doc.at("grid_len").get<int>() ||
        m.max_shift() != doc.at("max_shift").get<int>() ||
        m.max_skip() != doc.at("max_skip").get<int>())
      throw DataError("'" + path + "': declared shape disagrees with stored tables");

    const auto errs = check_model(m);
    if (!errs.empty()) {
      std::string msg = "'" + path + "': invalid model:";
      for (const auto& e : errs) msg += "\n  - " + e;
      throw DataError(msg);
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path + "': " + e.what());
  }
}

void export_alignments(const WarpMixtureModel& model, const CurveSet& data,
                       const std::string& path) {
  std::ostringstream out;
  const int dims = model.dims();
  out << "curve_id,step,component,grid_position";
  for (int d = 0; d < dims; ++d) out << ",offset_d" << d;
  for (int d = 0; d < dims; ++d) out << ",residual_d" << d;
  out << "\n";
  for (const auto& curve : data.curves) {
    const Alignment al = viterbi_align(curve, model);
    for (Eigen::Index j = 0; j < curve.length(); ++j) {
      out << curve.id << "," << j << "," << al.component << "," << al.path[j];
      for (int d = 0; d < dims; ++d) out << "," << format_double(al.offset(d));
      for (int d = 0; d < dims; ++d) {
        const double r =
            curve.points(j, d) - al.offset(d) - model.means[al.component](al.path[j], d);
        out << "," << format_double(r);
      }
      out << "\n";
    }
  }
  write_text_atomic(path, out.str());
}

void export_cluster_bands(const WarpMixtureModel& model, const std::string& path) {
  std::ostringstream out;
  out << "component,grid_position,dim,mean,lower,upper\n";
  for (int k = 0; k < model.components(); ++k)
    for (int t = 0; t < model.grid_len(); ++t)
      for (int d = 0; d < model.dims(); ++d) {
        const double mean = model.means[k](t, d);
        const double half = 2.0 * std::sqrt(model.vars[k](t, d));
        out << k << "," << t << "," << d << "," << format_double(mean) << ","
            << format_double(mean - half) << "," << format_double(mean + half) << "\n";
      }
  write_text_atomic(path, out.str());
}

}  // namespace warpmix
