#pragma once

// Motion file formats: the skeleton and humanoid JSON schemas, standalone
// contact files, joint-limit tables, and a BVH subset reader.  All output
// goes through ordered JSON with fixed key order, so identical inputs always
// serialize to identical bytes.

#include "motionkit/errors.hpp"
#include "motionkit/retarget.hpp"
#include "motionkit/skeleton.hpp"

#include <json.hpp>

#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace motionkit {

using OrderedJson = nlohmann::ordered_json;

/// How positions read from disk map into the library's convention
/// (meters, +z up).
struct LoadOptions {
  char up_axis = 'z';  // 'z': keep; 'y': rotate y-up data a quarter turn about +x
  double scale = 1.0;  // multiply all lengths (e.g. 0.01 for centimeter files)
};

enum class MotionFileKind { kSkeleton, kHumanoid };

/// One loaded motion file: a skeleton motion with its own joint tree, or a
/// humanoid motion (always on the canonical rig).
struct MotionDocument {
  MotionFileKind kind = MotionFileKind::kSkeleton;
  JointTree tree;
  SkeletonMotion skeleton;
  HumanoidMotion humanoid;
};

namespace detail {

inline OrderedJson vec3_to_json(const Vec3& v) { return OrderedJson::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const OrderedJson& j, const char* what) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
      !j[2].is_number()) {
    throw ParseError(std::string(what) + " must be a 3-element number array");
  }
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline EulerZYX euler_from_json(const OrderedJson& j, const char* what) {
  const Vec3 v = vec3_from_json(j, what);
  return EulerZYX{v.x(), v.y(), v.z()};
}

inline const OrderedJson& require(const OrderedJson& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw ParseError(std::string("missing required key \"") + key + "\"");
  }
  return *it;
}

inline double require_fps(const OrderedJson& j) {
  const OrderedJson& fps = require(j, "fps");
  if (!fps.is_number() || fps.get<double>() <= 0.0) {
    throw ParseError("\"fps\" must be a positive number");
  }
  return fps.get<double>();
}

inline OrderedJson parse_json_text(const std::string& text) {
  try {
    return OrderedJson::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    // nlohmann reports a byte offset; recover the line for the message.
    int line = 1;
    for (size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') ++line;
    }
    throw ParseError(std::string("invalid JSON: ") + e.what(), line);
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write file: " + path);
  }
  out << text;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Skeleton motion JSON.
//
// { "fps": 30.0,
//   "joints": [ { "name": "...", "parent": -1, "offset": [x, y, z] }, ... ],
//   "frames": [ { "root": [x, y, z], "quats": [[w, x, y, z], ...] }, ... ],
//   "contacts": [ [c0, c1, c2, c3], ... ] }        // optional

inline OrderedJson skeleton_to_json(const JointTree& tree, const SkeletonMotion& motion) {
  OrderedJson j;
  j["fps"] = motion.fps;
  j["joints"] = OrderedJson::array();
  for (const Joint& joint : tree.joints()) {
    OrderedJson row;
    row["name"] = joint.name;
    row["parent"] = joint.parent;
    row["offset"] = detail::vec3_to_json(joint.offset);
    j["joints"].push_back(std::move(row));
  }
  j["frames"] = OrderedJson::array();
  for (const SkeletonFrame& f : motion.frames) {
    OrderedJson row;
    row["root"] = detail::vec3_to_json(f.root);
    row["quats"] = OrderedJson::array();
    for (const Quat& q : f.quats) {
      row["quats"].push_back(OrderedJson::array({q.w(), q.x(), q.y(), q.z()}));
    }
    j["frames"].push_back(std::move(row));
  }
  if (motion.has_contacts()) {
    j["contacts"] = OrderedJson::array();
    for (const auto& row : motion.contacts) {
      j["contacts"].push_back(OrderedJson::array({row[0], row[1], row[2], row[3]}));
    }
  }
  return j;
}

inline MotionDocument skeleton_from_json(const OrderedJson& j) {
  MotionDocument doc;
  doc.kind = MotionFileKind::kSkeleton;
  doc.skeleton.fps = detail::require_fps(j);

  const OrderedJson& joints = detail::require(j, "joints");
  if (!joints.is_array() || joints.empty()) {
    throw ParseError("\"joints\" must be a non-empty array");
  }
  std::vector<Joint> rows;
  for (const auto& row : joints) {
    Joint joint;
    joint.name = detail::require(row, "name").get<std::string>();
    joint.parent = detail::require(row, "parent").get<int>();
    joint.offset = detail::vec3_from_json(detail::require(row, "offset"), "joint offset");
    rows.push_back(std::move(joint));
  }
  try {
    doc.tree = JointTree(std::move(rows));
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("bad joint tree: ") + e.what());
  }

  const OrderedJson& frames = detail::require(j, "frames");
  if (!frames.is_array()) {
    throw ParseError("\"frames\" must be an array");
  }
  for (const auto& row : frames) {
    SkeletonFrame f;
    f.root = detail::vec3_from_json(detail::require(row, "root"), "frame root");
    const OrderedJson& quats = detail::require(row, "quats");
    if (!quats.is_array() || static_cast<int>(quats.size()) != doc.tree.size()) {
      throw ParseError("\"quats\" must list one quaternion per joint");
    }
    for (const auto& q : quats) {
      if (!q.is_array() || q.size() != 4) {
        throw ParseError("quaternions must be [w, x, y, z] arrays");
      }
      f.quats.emplace_back(q[0].get<double>(), q[1].get<double>(), q[2].get<double>(),
                           q[3].get<double>());
    }
    doc.skeleton.frames.push_back(std::move(f));
  }

  if (j.contains("contacts")) {
    const OrderedJson& contacts = j["contacts"];
    if (!contacts.is_array() || contacts.size() != doc.skeleton.frames.size()) {
      throw ParseError("\"contacts\" must list one row per frame");
    }
    for (const auto& row : contacts) {
      if (!row.is_array() || row.size() != 4) {
        throw ParseError("contact rows must have 4 entries");
      }
      doc.skeleton.contacts.push_back(
          {row[0].get<double>(), row[1].get<double>(), row[2].get<double>(), row[3].get<double>()});
    }
  }

  try {
    validate_motion(doc.tree, doc.skeleton);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("invalid motion: ") + e.what());
  }
  return doc;
}

// ---------------------------------------------------------------------------
// Humanoid motion JSON.
//
// { "fps": 30.0,
//   "frames": [ { "root": [x, y, z], "root_euler": [ez, ey, ex],
//                 "eulers": { "mid_spine": [ez, ey, ex], ... } }, ... ] }

inline OrderedJson humanoid_to_json(const HumanoidMotion& motion) {
  OrderedJson j;
  j["fps"] = motion.fps;
  j["frames"] = OrderedJson::array();
  for (const HumanoidFrame& f : motion.frames) {
    OrderedJson row;
    row["root"] = detail::vec3_to_json(f.root);
    row["root_euler"] = OrderedJson::array({f.root_euler.ez, f.root_euler.ey, f.root_euler.ex});
    OrderedJson eulers;
    for (int i = 0; i < kDrivenCount; ++i) {
      eulers[kCanonicalJointNames[kDrivenJoints[i]]] =
          OrderedJson::array({f.eulers[i].ez, f.eulers[i].ey, f.eulers[i].ex});
    }
    row["eulers"] = std::move(eulers);
    j["frames"].push_back(std::move(row));
  }
  return j;
}

inline HumanoidMotion humanoid_from_json(const OrderedJson& j) {
  HumanoidMotion motion;
  motion.fps = detail::require_fps(j);
  const OrderedJson& frames = detail::require(j, "frames");
  if (!frames.is_array()) {
    throw ParseError("\"frames\" must be an array");
  }
  for (const auto& row : frames) {
    HumanoidFrame f;
    f.root = detail::vec3_from_json(detail::require(row, "root"), "frame root");
    f.root_euler = detail::euler_from_json(detail::require(row, "root_euler"), "root_euler");
    const OrderedJson& eulers = detail::require(row, "eulers");
    if (!eulers.is_object()) {
      throw ParseError("\"eulers\" must map joint names to angle triples");
    }
    std::array<bool, kDrivenCount> seen{};
    for (const auto& [name, value] : eulers.items()) {
      const int joint = canonical_tree().find(name);
      const int idx = joint >= 0 ? driven_index(joint) : -1;
      if (idx < 0) {
        throw ParseError("\"eulers\" names a joint that is not humanoid-driven: " + name);
      }
      f.eulers[idx] = detail::euler_from_json(value, name.c_str());
      seen[idx] = true;
    }
    for (int i = 0; i < kDrivenCount; ++i) {
      if (!seen[i]) {
        throw ParseError(std::string("\"eulers\" is missing joint ") +
                         kCanonicalJointNames[kDrivenJoints[i]]);
      }
    }
    motion.frames.push_back(std::move(f));
  }
  return motion;
}

// ---------------------------------------------------------------------------
// Standalone contact files: { "contacts": [ [c0, c1, c2, c3], ... ] }, or any
// skeleton motion JSON that embeds a "contacts" array.

inline ContactPrediction contacts_from_json(const OrderedJson& j) {
  const OrderedJson& rows = detail::require(j, "contacts");
  if (!rows.is_array() || rows.empty()) {
    throw ParseError("\"contacts\" must be a non-empty array");
  }
  ContactPrediction out;
  for (const auto& row : rows) {
    if (!row.is_array() || row.size() != 4) {
      throw ParseError("contact rows must have 4 entries");
    }
    std::array<double, 4> r;
    for (int c = 0; c < 4; ++c) {
      r[c] = row[c].get<double>();
      if (!(r[c] >= 0.0 && r[c] <= 1.0)) {
        throw ParseError("contact probability outside [0, 1]");
      }
    }
    out.push_back(r);
  }
  return out;
}

inline OrderedJson contacts_to_json(const ContactPrediction& contacts) {
  OrderedJson j;
  j["contacts"] = OrderedJson::array();
  for (const auto& row : contacts) {
    j["contacts"].push_back(OrderedJson::array({row[0], row[1], row[2], row[3]}));
  }
  return j;
}

// ---------------------------------------------------------------------------
// Joint limit tables:
// { "root": { "z": [lo, hi], "y": [lo, hi], "x": [lo, hi] }, "left_elbow": ... }
// Joints not listed keep the permissive default.

inline JointLimitTable joint_limits_from_json(const OrderedJson& j) {
  JointLimitTable table = JointLimitTable::permissive();
  if (!j.is_object()) {
    throw ParseError("joint limit table must be a JSON object");
  }
  for (const auto& [name, ranges] : j.items()) {
    int row = -1;
    if (name == "root") {
      row = 0;
    } else {
      const int joint = canonical_tree().find(name);
      const int idx = joint >= 0 ? driven_index(joint) : -1;
      if (idx >= 0) row = 1 + idx;
    }
    if (row < 0) {
      throw ParseError("joint limit table names an unknown joint: " + name);
    }
    const char* channels[3] = {"z", "y", "x"};
    for (int c = 0; c < 3; ++c) {
      if (!ranges.contains(channels[c])) continue;
      const OrderedJson& pair = ranges[channels[c]];
      if (!pair.is_array() || pair.size() != 2) {
        throw ParseError("limit ranges must be [lo, hi] arrays");
      }
      ChannelRange r{pair[0].get<double>(), pair[1].get<double>()};
      if (r.lo > r.hi) {
        throw ParseError("limit range has lo > hi for joint " + name);
      }
      table.rows[row][c] = r;
    }
  }
  return table;
}

inline JointLimitTable load_joint_limits(const std::string& path) {
  return joint_limits_from_json(detail::parse_json_text(detail::read_file(path)));
}

// ---------------------------------------------------------------------------
// BVH subset reader.  Supported: HIERARCHY with ROOT/JOINT/End Site nodes,
// OFFSET, CHANNELS with 6 root channels (3 positions then 3 rotations) and 3
// rotation channels elsewhere, rotation orders ZYX or XYZ only, then MOTION
// with "Frames:" and "Frame Time:".  Rotations are degrees in file order.

namespace detail {

struct BvhLexer {
  explicit BvhLexer(const std::string& text) : text_(text) {}

  // Returns the next whitespace-delimited token; empty string at end.
  std::string next() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
    const size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  std::string expect(const std::string& what) {
    std::string tok = next();
    if (tok.empty()) {
      throw ParseError("unexpected end of file, expected " + what, line_);
    }
    return tok;
  }

  void expect_literal(const std::string& literal) {
    const std::string tok = expect("\"" + literal + "\"");
    if (tok != literal) {
      throw ParseError("expected \"" + literal + "\", got \"" + tok + "\"", line_);
    }
  }

  double expect_number(const std::string& what) {
    const std::string tok = expect(what);
    try {
      size_t used = 0;
      const double v = std::stod(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError("expected a number for " + what + ", got \"" + tok + "\"", line_);
    }
  }

  int line() const { return line_; }

 private:
  const std::string& text_;
  size_t pos_ = 0;
  int line_ = 1;
};

enum class BvhChannel { kXpos, kYpos, kZpos, kXrot, kYrot, kZrot };

inline BvhChannel bvh_channel(const std::string& name, int line) {
  if (name == "Xposition") return BvhChannel::kXpos;
  if (name == "Yposition") return BvhChannel::kYpos;
  if (name == "Zposition") return BvhChannel::kZpos;
  if (name == "Xrotation") return BvhChannel::kXrot;
  if (name == "Yrotation") return BvhChannel::kYrot;
  if (name == "Zrotation") return BvhChannel::kZrot;
  throw ParseError("unknown BVH channel \"" + name + "\"", line);
}

// Composes rotation channels in file order (degrees).
inline Mat3 bvh_rotation(const std::vector<BvhChannel>& rot_channels,
                         const double* values) {
  Mat3 r = Mat3::Identity();
  for (size_t i = 0; i < rot_channels.size(); ++i) {
    const double a = values[i] * kPi / 180.0;
    switch (rot_channels[i]) {
      case BvhChannel::kXrot:
        r = r * euler_to_matrix(EulerZYX{0.0, 0.0, a});
        break;
      case BvhChannel::kYrot:
        r = r * euler_to_matrix(EulerZYX{0.0, a, 0.0});
        break;
      default:
        r = r * euler_to_matrix(EulerZYX{a, 0.0, 0.0});
        break;
    }
  }
  return r;
}

}  // namespace detail

inline MotionDocument bvh_from_text(const std::string& text, const LoadOptions& opts = {}) {
  detail::BvhLexer lex(text);
  lex.expect_literal("HIERARCHY");

  std::vector<Joint> joints;
  // Per joint: the rotation channel order; the root also has positions.
  std::vector<std::vector<detail::BvhChannel>> rot_channels;
  std::vector<detail::BvhChannel> root_positions;

  // Recursive-descent over the node tree.
  auto parse_node = [&](auto&& self, int parent) -> void {
    const std::string name = lex.expect("joint name");
    lex.expect_literal("{");
    lex.expect_literal("OFFSET");
    Vec3 offset;
    offset.x() = lex.expect_number("offset x");
    offset.y() = lex.expect_number("offset y");
    offset.z() = lex.expect_number("offset z");

    lex.expect_literal("CHANNELS");
    const int n = static_cast<int>(lex.expect_number("channel count"));
    std::vector<detail::BvhChannel> channels;
    for (int i = 0; i < n; ++i) {
      channels.push_back(detail::bvh_channel(lex.expect("channel name"), lex.line()));
    }

    const bool is_root = parent < 0;
    if (is_root) {
      if (n != 6) {
        throw UnsupportedFormatError("BVH root must have 6 channels", lex.line());
      }
      for (int i = 0; i < 3; ++i) {
        if (channels[i] != detail::BvhChannel::kXpos && channels[i] != detail::BvhChannel::kYpos &&
            channels[i] != detail::BvhChannel::kZpos) {
          throw UnsupportedFormatError("BVH root channels must start with 3 positions",
                                       lex.line());
        }
      }
      root_positions.assign(channels.begin(), channels.begin() + 3);
      channels.erase(channels.begin(), channels.begin() + 3);
    } else if (n != 3) {
      throw UnsupportedFormatError("BVH joints must have exactly 3 rotation channels",
                                   lex.line());
    }

    const bool zyx = channels == std::vector<detail::BvhChannel>{detail::BvhChannel::kZrot,
                                                                 detail::BvhChannel::kYrot,
                                                                 detail::BvhChannel::kXrot};
    const bool xyz = channels == std::vector<detail::BvhChannel>{detail::BvhChannel::kXrot,
                                                                 detail::BvhChannel::kYrot,
                                                                 detail::BvhChannel::kZrot};
    if (!zyx && !xyz) {
      throw UnsupportedFormatError("BVH rotation order must be ZYX or XYZ", lex.line());
    }

    const int index = static_cast<int>(joints.size());
    joints.push_back(Joint{name, parent, opts.scale * offset});
    rot_channels.push_back(channels);

    for (std::string tok = lex.expect("JOINT, End, or }"); tok != "}";
         tok = lex.expect("JOINT, End, or }")) {
      if (tok == "JOINT") {
        self(self, index);
      } else if (tok == "End") {
        lex.expect_literal("Site");
        lex.expect_literal("{");
        lex.expect_literal("OFFSET");
        lex.expect_number("end site x");
        lex.expect_number("end site y");
        lex.expect_number("end site z");
        lex.expect_literal("}");
      } else {
        throw ParseError("expected JOINT, End, or } in BVH hierarchy, got \"" + tok + "\"",
                         lex.line());
      }
    }
  };

  lex.expect_literal("ROOT");
  parse_node(parse_node, -1);

  lex.expect_literal("MOTION");
  lex.expect_literal("Frames:");
  const int frame_count = static_cast<int>(lex.expect_number("frame count"));
  if (frame_count < 1) {
    throw ParseError("BVH must contain at least one frame", lex.line());
  }
  lex.expect_literal("Frame");
  lex.expect_literal("Time:");
  const double frame_time = lex.expect_number("frame time");
  if (frame_time <= 0.0) {
    throw ParseError("BVH frame time must be positive", lex.line());
  }

  MotionDocument doc;
  doc.kind = MotionFileKind::kSkeleton;
  doc.tree = JointTree(joints);
  doc.skeleton.fps = 1.0 / frame_time;

  const int joint_count = static_cast<int>(joints.size());
  for (int f = 0; f < frame_count; ++f) {
    SkeletonFrame frame;
    frame.quats.reserve(joint_count);
    for (int jn = 0; jn < joint_count; ++jn) {
      if (jn == 0) {
        double pos[3];
        for (int i = 0; i < 3; ++i) pos[i] = lex.expect_number("root position");
        Vec3 root = Vec3::Zero();
        for (int i = 0; i < 3; ++i) {
          switch (root_positions[i]) {
            case detail::BvhChannel::kXpos: root.x() = pos[i]; break;
            case detail::BvhChannel::kYpos: root.y() = pos[i]; break;
            default: root.z() = pos[i]; break;
          }
        }
        frame.root = opts.scale * root;
      }
      double rot[3];
      for (int i = 0; i < 3; ++i) rot[i] = lex.expect_number("rotation value");
      frame.quats.emplace_back(detail::bvh_rotation(rot_channels[jn], rot));
      frame.quats.back().normalize();
    }
    doc.skeleton.frames.push_back(std::move(frame));
  }

  if (opts.up_axis == 'y') {
    // Quarter turn about +x carries y-up data to z-up: (x, y, z) -> (x, -z, y).
    const Mat3 s = euler_to_matrix(EulerZYX{0.0, 0.0, kPi / 2.0});
    const Quat sq(s);
    for (Joint& joint : joints) joint.offset = s * joint.offset;
    doc.tree = JointTree(joints);
    for (SkeletonFrame& frame : doc.skeleton.frames) {
      frame.root = s * frame.root;
      // With offsets rebased by s, every local rotation conjugates too.
      for (Quat& q : frame.quats) {
        q = (sq * q * sq.conjugate()).normalized();
      }
    }
  } else if (opts.up_axis != 'z') {
    throw std::invalid_argument("up axis must be 'z' or 'y'");
  }

  validate_motion(doc.tree, doc.skeleton);
  return doc;
}

// ---------------------------------------------------------------------------
// Top-level load/save.

/// Loads a motion file, sniffing the format: BVH when the content starts with
/// HIERARCHY (or the extension is .bvh), otherwise JSON, where a "joints" key
/// means skeleton and an "eulers"-bearing frame means humanoid.
inline MotionDocument load_motion(const std::string& path, const LoadOptions& opts = {}) {
  const std::string text = detail::read_file(path);
  const size_t first = text.find_first_not_of(" \t\r\n");
  const bool bvh = (path.size() > 4 && path.substr(path.size() - 4) == ".bvh") ||
                   (first != std::string::npos && text.compare(first, 9, "HIERARCHY") == 0);
  if (bvh) {
    return bvh_from_text(text, opts);
  }
  const OrderedJson j = detail::parse_json_text(text);
  if (j.contains("joints")) {
    MotionDocument doc = skeleton_from_json(j);
    if (opts.up_axis != 'z' || opts.scale != 1.0) {
      throw UnsupportedFormatError(
          "up-axis / unit conversion applies to BVH input only; JSON files are canonical");
    }
    return doc;
  }
  if (j.contains("frames")) {
    MotionDocument doc;
    doc.kind = MotionFileKind::kHumanoid;
    doc.tree = canonical_tree();
    doc.humanoid = humanoid_from_json(j);
    return doc;
  }
  throw ParseError("JSON motion needs either \"joints\" (skeleton) or \"frames\" with eulers "
                   "(humanoid)");
}

inline ContactPrediction load_contacts(const std::string& path) {
  return contacts_from_json(detail::parse_json_text(detail::read_file(path)));
}

inline std::string dump_json(const OrderedJson& j) { return j.dump(2) + "\n"; }

inline void save_skeleton_motion(const std::string& path, const JointTree& tree,
                                 const SkeletonMotion& motion) {
  detail::write_file(path, dump_json(skeleton_to_json(tree, motion)));
}

inline void save_humanoid_motion(const std::string& path, const HumanoidMotion& motion) {
  detail::write_file(path, dump_json(humanoid_to_json(motion)));
}

}  // namespace motionkit
