#include <cstdio>
#include <fstream>
#include <sstream>

#include "a2flow/mesh.hpp"

namespace a2flow {

namespace {

[[noreturn]] void parse_fail(const std::string& path, int lineno, const std::string& msg) {
  std::ostringstream ss;
  ss << path << ":" << lineno << ": " << msg;
  throw MeshError(ss.str());
}

// OBJ face corners may be v, v/vt, v/vt/vn, or v//vn; only v matters here.
int obj_corner_index(const std::string& token, const std::string& path, int lineno, int nv) {
  std::string head = token.substr(0, token.find('/'));
  int idx = 0;
  try {
    size_t used = 0;
    idx = std::stoi(head, &used);
    if (used != head.size()) throw std::invalid_argument("trail");
  } catch (const std::exception&) {
    parse_fail(path, lineno, "bad face corner '" + token + "'");
  }
  if (idx < 0) parse_fail(path, lineno, "negative (relative) indices are not supported");
  if (idx == 0 || idx > nv) parse_fail(path, lineno, "vertex index out of range in face corner");
  return idx - 1;
}

}  // namespace

Immersion load_obj(const AmbientManifold& ambient, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open OBJ file: " + path);
  std::vector<Vec3d> pos;
  std::vector<std::array<int, 3>> tri;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    if (key[0] == '#') continue;
    if (key == "v") {
      Vec3d p;
      if (!(ss >> p.x >> p.y >> p.z)) parse_fail(path, lineno, "expected 'v x y z'");
      pos.push_back(p);
    } else if (key == "f") {
      std::vector<std::string> corners;
      std::string tok;
      while (ss >> tok) corners.push_back(tok);
      if (corners.size() != 3)
        parse_fail(path, lineno, "only triangular faces are supported");
      std::array<int, 3> f{};
      for (int i = 0; i < 3; ++i)
        f[i] = obj_corner_index(corners[i], path, lineno, static_cast<int>(pos.size()));
      tri.push_back(f);
    } else if (key == "vn" || key == "vt" || key == "o" || key == "g" || key == "s" ||
               key == "usemtl" || key == "mtllib") {
      continue;  // standard statements we do not need
    } else {
      parse_fail(path, lineno, "unrecognized statement '" + key + "'");
    }
  }
  Immersion m;
  m.ambient = ambient;
  m.conn = std::make_shared<Connectivity>(
      Connectivity::build(static_cast<int>(pos.size()), std::move(tri)));
  m.pos = std::move(pos);
  m.validate();
  return m;
}

void save_obj(const Immersion& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write OBJ file: " + path);
  char buf[128];
  for (const auto& p : m.pos) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", p.x, p.y, p.z);
    out << buf;
  }
  for (const auto& f : m.c().faces())
    out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
  if (!out) throw MeshError("failed writing OBJ file: " + path);
}

void save_ply(const Immersion& m, const std::string& path,
              const std::vector<PlyChannel>& channels) {
  for (const auto& ch : channels)
    if (static_cast<int>(ch.value.size()) != m.c().vertex_count())
      throw MeshError("PLY channel '" + ch.name + "' size does not match vertex count");
  std::ofstream out(path);
  if (!out) throw MeshError("cannot write PLY file: " + path);
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << m.c().vertex_count() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  for (const auto& ch : channels) out << "property double " << ch.name << "\n";
  out << "element face " << m.c().face_count() << "\n";
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";
  char buf[128];
  for (int v = 0; v < m.c().vertex_count(); ++v) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", m.pos[v].x, m.pos[v].y, m.pos[v].z);
    out << buf;
    for (const auto& ch : channels) {
      std::snprintf(buf, sizeof buf, " %.17g", ch.value[v]);
      out << buf;
    }
    out << "\n";
  }
  for (const auto& f : m.c().faces()) out << "3 " << f[0] << " " << f[1] << " " << f[2] << "\n";
  if (!out) throw MeshError("failed writing PLY file: " + path);
}

Immersion load_ply(const AmbientManifold& ambient, const std::string& path,
                   std::vector<PlyChannel>* channels) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open PLY file: " + path);
  std::string line;
  int lineno = 0;
  auto next = [&]() {
    if (!std::getline(in, line)) parse_fail(path, lineno, "unexpected end of file");
    ++lineno;
  };
  next();
  if (line != "ply") parse_fail(path, lineno, "missing 'ply' magic");
  int nv = -1, nf = -1;
  std::vector<std::string> vertex_props;
  std::string element;
  for (;;) {
    next();
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key == "comment") continue;
    if (key == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "ascii") parse_fail(path, lineno, "only ascii PLY is supported");
    } else if (key == "element") {
      std::string what;
      int count;
      if (!(ss >> what >> count)) parse_fail(path, lineno, "bad element line");
      element = what;
      if (what == "vertex") nv = count;
      else if (what == "face") nf = count;
      else parse_fail(path, lineno, "unsupported element '" + what + "'");
    } else if (key == "property") {
      std::string type;
      ss >> type;
      if (element == "vertex") {
        std::string name;
        if (type != "double" && type != "float")
          parse_fail(path, lineno, "vertex properties must be float or double");
        if (!(ss >> name)) parse_fail(path, lineno, "property missing name");
        vertex_props.push_back(name);
      }
      // face list property: accepted as written by save_ply
    } else if (key == "end_header") {
      break;
    } else {
      parse_fail(path, lineno, "unrecognized header line '" + key + "'");
    }
  }
  if (nv <= 0 || nf <= 0) parse_fail(path, lineno, "missing vertex or face element");
  if (vertex_props.size() < 3 || vertex_props[0] != "x" || vertex_props[1] != "y" ||
      vertex_props[2] != "z")
    parse_fail(path, lineno, "vertex properties must start with x y z");

  std::vector<Vec3d> pos(nv);
  std::vector<PlyChannel> extra;
  for (size_t p = 3; p < vertex_props.size(); ++p)
    extra.push_back({vertex_props[p], std::vector<double>(nv)});
  for (int v = 0; v < nv; ++v) {
    next();
    std::istringstream ss(line);
    if (!(ss >> pos[v].x >> pos[v].y >> pos[v].z)) parse_fail(path, lineno, "bad vertex row");
    for (auto& ch : extra)
      if (!(ss >> ch.value[v])) parse_fail(path, lineno, "missing channel value");
  }
  std::vector<std::array<int, 3>> tri(nf);
  for (int f = 0; f < nf; ++f) {
    next();
    std::istringstream ss(line);
    int cnt;
    if (!(ss >> cnt) || cnt != 3) parse_fail(path, lineno, "only triangular faces are supported");
    if (!(ss >> tri[f][0] >> tri[f][1] >> tri[f][2])) parse_fail(path, lineno, "bad face row");
  }
  if (channels) *channels = std::move(extra);
  Immersion m;
  m.ambient = ambient;
  m.conn = std::make_shared<Connectivity>(Connectivity::build(nv, std::move(tri)));
  m.pos = std::move(pos);
  m.validate();
  return m;
}

}  // namespace a2flow
