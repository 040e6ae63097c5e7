#include "emd/instance_io.hpp"

#include <fstream>
#include <sstream>

#include "emd/error.hpp"
#include "json.hpp"

namespace emd {

namespace {

using nlohmann::json;

std::size_t positive_size(const json& doc, const char* key) {
  if (!doc.contains(key)) throw Error(ErrorKind::Parse, std::string("instance: missing field '") + key + "'");
  const json& v = doc.at(key);
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    throw Error(ErrorKind::Parse, std::string("instance: '") + key + "' must be a positive integer");
  }
  return static_cast<std::size_t>(v.get<long long>());
}

Vector number_array(const json& doc, const char* key, std::size_t expected) {
  if (!doc.contains(key)) throw Error(ErrorKind::Parse, std::string("instance: missing field '") + key + "'");
  const json& v = doc.at(key);
  if (!v.is_array()) throw Error(ErrorKind::Parse, std::string("instance: '") + key + "' must be an array");
  if (v.size() != expected) {
    throw Error(ErrorKind::Parse, std::string("instance: '") + key + "' has " + std::to_string(v.size()) +
                                      " entries, expected " + std::to_string(expected));
  }
  Vector out;
  out.reserve(expected);
  for (const json& e : v) {
    if (!e.is_number()) throw Error(ErrorKind::Parse, std::string("instance: '") + key + "' holds a non-number");
    out.push_back(e.get<double>());
  }
  return out;
}

}  // namespace

ProblemInstance parse_instance_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("instance: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::Parse, "instance: top level must be an object");
  const std::size_t m = positive_size(doc, "m");
  const std::size_t n = positive_size(doc, "n");
  ProblemInstance p{DenseMatrix(m, n, number_array(doc, "a", m * n)), number_array(doc, "b", m), std::nullopt};
  if (doc.contains("z") && !doc.at("z").is_null()) p.planted = number_array(doc, "z", n);
  p.validate();
  return p;
}

ProblemInstance load_instance(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open instance file " + path.string());
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_instance_json(buf.str());
}

std::string instance_to_json(const ProblemInstance& p) {
  json doc = json::object();
  doc["m"] = p.rows();
  doc["n"] = p.cols();
  doc["a"] = p.a.entries();
  doc["b"] = p.b;
  if (p.planted) doc["z"] = *p.planted;
  return doc.dump();
}

}  // namespace emd
